#pragma once

// Two-mode Gaussian states as 4x4 covariance matrices.
//
// Conventions, fixed across the whole library and every file format:
//
//   * quadrature ordering (p1, q1, p2, q2), p = amplitude, q = phase;
//   * SQL normalization: vacuum/coherent variance = 1, so the EPR
//     combinations (p1 - p2)/sqrt(2) and (q1 + q2)/sqrt(2) have vacuum
//     variance 1 and the Duan separability bound is 2.
//
// Neither choice is forced by physics; they are declared once here and
// everything else relies on them. First moments are zero throughout (they
// carry no entanglement information).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace twinbeam {

using Matrix4 = Eigen::Matrix4d;
using Matrix2 = Eigen::Matrix2d;

// Default tolerances. Physicality and family tolerances are parameters on
// the operations that use them; estimated matrices from finite samples
// need values around 1e-3 instead.
inline constexpr double kPhysicalityTol = 1e-9;
inline constexpr double kSymmetryTol = 1e-9;
inline constexpr double kSeparabilityTol = 1e-9;
inline constexpr double kDiscriminantTol = 1e-12;

enum class Mode : int { One = 1, Two = 2 };

/// Thrown when a state violates the uncertainty principle; carries the
/// offending symplectic eigenvalue.
class unphysical_error : public std::runtime_error {
public:
    unphysical_error(const std::string& msg, double nu_min)
        : std::runtime_error(msg), nu_min_(nu_min) {}

    double nu_min() const noexcept { return nu_min_; }

private:
    double nu_min_;
};

/// The fixed symplectic form Omega = [[0,1],[-1,0]] for each (p,q) pair.
/// Omega^T = -Omega and Omega^2 = -I.
inline const Matrix4& symplectic_form() {
    static const Matrix4 omega = [] {
        Matrix4 m = Matrix4::Zero();
        m(0, 1) = 1.0;
        m(1, 0) = -1.0;
        m(2, 3) = 1.0;
        m(3, 2) = -1.0;
        return m;
    }();
    return omega;
}

/// Symmetric positive-definite 4x4 second-moment matrix in the canonical
/// ordering. Symmetry is enforced by storage, positive definiteness is
/// checked at construction. Physicality (both symplectic eigenvalues >= 1)
/// is deliberately not enforced here: partially transposed matrices are
/// legitimate values of this type.
class CovarianceMatrix {
public:
    explicit CovarianceMatrix(const Matrix4& m, double symmetry_tol = kSymmetryTol) {
        if (!m.allFinite())
            throw std::invalid_argument("CovarianceMatrix: non-finite entries");
        const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
        if (asym > symmetry_tol)
            throw std::invalid_argument(
                "CovarianceMatrix: input not symmetric (max |V_ij - V_ji| = " +
                std::to_string(asym) + ")");
        entries_ = 0.5 * (m + m.transpose());
        Eigen::LLT<Matrix4> llt(entries_);
        if (llt.info() != Eigen::Success) {
            Eigen::SelfAdjointEigenSolver<Matrix4> es(entries_, Eigen::EigenvaluesOnly);
            throw std::invalid_argument(
                "CovarianceMatrix: not positive definite (min eigenvalue " +
                std::to_string(es.eigenvalues().minCoeff()) + ")");
        }
    }

    static CovarianceMatrix vacuum() { return CovarianceMatrix(Matrix4::Identity()); }

    double operator()(int i, int j) const { return entries_(i, j); }
    const Matrix4& matrix() const noexcept { return entries_; }

    Matrix2 mode1_block() const { return entries_.block<2, 2>(0, 0); }
    Matrix2 mode2_block() const { return entries_.block<2, 2>(2, 2); }
    Matrix2 cross_block() const { return entries_.block<2, 2>(0, 2); }

    double determinant() const { return entries_.determinant(); }

    friend bool operator==(const CovarianceMatrix& a, const CovarianceMatrix& b) {
        return (a.entries_.array() == b.entries_.array()).all();
    }

private:
    Matrix4 entries_;
};

/// The four EPR-combination variances of a state that is symmetric under
/// exchange of the two beams and free of amplitude-phase correlations:
///   p_minus = Var[(p1 - p2)/sqrt 2]    p_plus  = Var[(p1 + p2)/sqrt 2]
///   q_plus  = Var[(q1 + q2)/sqrt 2]    q_minus = Var[(q1 - q2)/sqrt 2]
struct TwinBeamVariances {
    double p_minus;
    double p_plus;
    double q_plus;
    double q_minus;

    bool all_positive() const {
        return p_minus > 0.0 && p_plus > 0.0 && q_plus > 0.0 && q_minus > 0.0;
    }

    // The embedded matrix has symplectic eigenvalues sqrt(p_minus*q_minus)
    // and sqrt(p_plus*q_plus).
    double nu_min() const {
        return std::sqrt(std::min(p_minus * q_minus, p_plus * q_plus));
    }
    double nu_max() const {
        return std::sqrt(std::max(p_minus * q_minus, p_plus * q_plus));
    }

    bool is_physical(double tol = kPhysicalityTol) const {
        return all_positive() && nu_min() >= 1.0 - tol;
    }
};

/// Embed EPR-combination variances into the full covariance matrix:
/// diagonal blocks diag(alpha, beta) on both modes, cross block
/// diag(gamma, delta), with alpha = (p_plus + p_minus)/2,
/// gamma = (p_plus - p_minus)/2, beta = (q_plus + q_minus)/2,
/// delta = (q_plus - q_minus)/2. All p-q cross entries are zero.
inline CovarianceMatrix embed(const TwinBeamVariances& v, double tol = kPhysicalityTol) {
    if (!v.all_positive())
        throw std::invalid_argument("embed: variances must be strictly positive");
    const double nu = v.nu_min();
    if (nu < 1.0 - tol)
        throw unphysical_error(
            "embed: state violates the uncertainty principle (nu_min = " +
                std::to_string(nu) + " < 1)",
            nu);

    const double alpha = 0.5 * (v.p_plus + v.p_minus);
    const double gamma = 0.5 * (v.p_plus - v.p_minus);
    const double beta = 0.5 * (v.q_plus + v.q_minus);
    const double delta = 0.5 * (v.q_plus - v.q_minus);

    Matrix4 m = Matrix4::Zero();
    m(0, 0) = m(2, 2) = alpha;
    m(0, 2) = m(2, 0) = gamma;
    m(1, 1) = m(3, 3) = beta;
    m(1, 3) = m(3, 1) = delta;
    return CovarianceMatrix(m);
}

/// Inverse of embed on the symmetric, cross-correlation-free subspace.
/// family_tol bounds how far the matrix may deviate from that family;
/// estimated matrices need a looser value than the default.
inline TwinBeamVariances extract(const CovarianceMatrix& V,
                                 double family_tol = kSymmetryTol) {
    const Matrix4& m = V.matrix();
    const double cross = std::max({std::abs(m(0, 1)), std::abs(m(0, 3)),
                                   std::abs(m(1, 2)), std::abs(m(2, 3))});
    if (cross > family_tol)
        throw std::invalid_argument(
            "extract: cross-correlation present (max |p-q entry| = " +
            std::to_string(cross) + ")");
    const double asym = std::max(std::abs(m(0, 0) - m(2, 2)), std::abs(m(1, 1) - m(3, 3)));
    if (asym > family_tol)
        throw std::invalid_argument(
            "extract: not symmetric under mode exchange (max diagonal mismatch = " +
            std::to_string(asym) + ")");

    const double alpha = 0.5 * (m(0, 0) + m(2, 2));
    const double beta = 0.5 * (m(1, 1) + m(3, 3));
    const double gamma = m(0, 2);
    const double delta = m(1, 3);
    return {alpha - gamma, alpha + gamma, beta + delta, beta - delta};
}

struct SymplecticEigenvalues {
    double nu_min;
    double nu_max;
};

/// Symplectic eigenvalues (moduli of the eigenvalues of i*Omega*V, each
/// reported once), via the two-mode invariant formula
///   nu^2 = (Delta -+ sqrt(Delta^2 - 4 det V)) / 2,
///   Delta = det A + det B + 2 det C
/// for the block decomposition V = [[A, C], [C^T, B]]. The smaller root is
/// recovered from the product det V = nu_min^2 * nu_max^2 to avoid
/// cancellation.
namespace detail {

// Rounding in delta and det V grows with the magnitude of the block
// invariants; strongly squeezed states reach |det C| ~ e^(8r) while the
// invariants themselves cancel to O(1). The negativity cutoffs below scale
// accordingly and reduce to the fixed kDiscriminantTol for O(1) states.
inline double invariant_slack(double det_a, double det_b, double det_c) {
    const double scale = std::abs(det_a) + std::abs(det_b) + 2.0 * std::abs(det_c);
    constexpr double eps = std::numeric_limits<double>::epsilon();
    return std::max(kDiscriminantTol, 64.0 * eps * scale * scale);
}

}  // namespace detail

inline SymplecticEigenvalues symplectic_eigenvalues(const CovarianceMatrix& V) {
    const Matrix4& m = V.matrix();
    const double det_a = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double det_b = m(2, 2) * m(3, 3) - m(2, 3) * m(3, 2);
    const double det_c = m(0, 2) * m(1, 3) - m(0, 3) * m(1, 2);
    const double delta = det_a + det_b + 2.0 * det_c;
    const double det_v = m.determinant();

    const double disc = delta * delta - 4.0 * det_v;
    if (disc < -detail::invariant_slack(det_a, det_b, det_c))
        throw std::domain_error(
            "symplectic_eigenvalues: negative discriminant (" + std::to_string(disc) +
            "); input is not a valid covariance matrix");

    const double nu2_max = 0.5 * (delta + std::sqrt(std::max(disc, 0.0)));
    const double nu2_min = nu2_max > 0.0 ? det_v / nu2_max : 0.0;
    return {std::sqrt(std::max(nu2_min, 0.0)), std::sqrt(std::max(nu2_max, 0.0))};
}

/// Uncertainty-principle gate: true iff the smallest symplectic eigenvalue
/// is >= 1 - tol. Positive definiteness already holds by construction.
///
/// Tested through the characteristic polynomial of nu^2 rather than the
/// extracted root: pure states sit exactly on the boundary with a doubly
/// degenerate spectrum, where sqrt of the discriminant costs ~1e-8 and
/// would fail the default tolerance spuriously.
inline bool is_physical(const CovarianceMatrix& V, double tol = kPhysicalityTol) {
    const Matrix4& m = V.matrix();
    const double det_a = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double det_b = m(2, 2) * m(3, 3) - m(2, 3) * m(3, 2);
    const double det_c = m(0, 2) * m(1, 3) - m(0, 3) * m(1, 2);
    const double delta = det_a + det_b + 2.0 * det_c;
    const double det_v = m.determinant();

    // both roots of x^2 - delta x + det_v lie at or above z = (1 - tol)^2
    const double z = (1.0 - tol) * (1.0 - tol);
    const double slack = detail::invariant_slack(det_a, det_b, det_c);
    const double q_at_bound = z * z - delta * z + det_v;
    return q_at_bound >= -slack && delta >= 2.0 * z - slack;
}

/// Purity 1/sqrt(det V); equals 1 exactly for pure Gaussian states.
inline double purity(const CovarianceMatrix& V) {
    return 1.0 / std::sqrt(V.determinant());
}

}  // namespace twinbeam
