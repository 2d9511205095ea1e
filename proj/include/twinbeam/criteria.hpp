#pragma once

// Entanglement tests: the Duan sum criterion (sufficient) and the PPT
// criterion (necessary and sufficient for two-mode Gaussian states).

#include "twinbeam/covariance.hpp"

#include <cmath>

namespace twinbeam {

/// Duan combination Var[(p1-p2)/sqrt 2] + Var[(q1+q2)/sqrt 2]; values below
/// 2 certify entanglement.
struct DuanReport {
    double value;
    bool violated;  // value < 2
};

/// Evaluated from the full matrix so it also serves estimated, slightly
/// asymmetric states.
inline DuanReport duan_sum(const CovarianceMatrix& V) {
    const Matrix4& m = V.matrix();
    const double p_minus = 0.5 * (m(0, 0) + m(2, 2) - 2.0 * m(0, 2));
    const double q_plus = 0.5 * (m(1, 1) + m(3, 3) + 2.0 * m(1, 3));
    const double value = p_minus + q_plus;
    return {value, value < 2.0};
}

/// Partial transposition of one mode: q_k -> -q_k, i.e. the sign of every
/// off-diagonal coupling in row/column q_k flips. Involution. The result
/// may be unphysical; that is the point of the test.
inline CovarianceMatrix partial_transpose(const CovarianceMatrix& V, Mode mode = Mode::Two) {
    Matrix4 m = V.matrix();
    const int k = mode == Mode::Two ? 3 : 1;
    for (int i = 0; i < 4; ++i) {
        if (i == k) continue;
        m(i, k) = -m(i, k);
        m(k, i) = -m(k, i);
    }
    return CovarianceMatrix(m);
}

struct PptReport {
    double nu_min;   // smallest symplectic eigenvalue after partial transposition
    bool entangled;  // nu_min < 1 - tol_sep
    bool boundary;   // |nu_min - 1| <= tol_sep
};

/// PPT test: entangled iff the smallest symplectic eigenvalue of the
/// partially transposed matrix is below one. tol_sep sets the decision
/// band; estimated matrices should pass a band from their bootstrap error
/// bars instead of the analytic default.
inline PptReport ppt_min_eigenvalue(const CovarianceMatrix& V, Mode mode = Mode::Two,
                                    double tol_sep = kSeparabilityTol) {
    const double nu = symplectic_eigenvalues(partial_transpose(V, mode)).nu_min;
    return {nu, nu < 1.0 - tol_sep, std::abs(nu - 1.0) <= tol_sep};
}

}  // namespace twinbeam
