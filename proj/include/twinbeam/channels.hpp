#pragma once

// Lossy-channel models: vacuum beamsplitter attenuation of one or both
// modes. The map is V' = X V X^T + Y with X = diag(sqrt t1, sqrt t1,
// sqrt t2, sqrt t2) and Y = diag(1-t1, 1-t1, 1-t2, 1-t2); mixing with
// vacuum keeps every output physical.

#include "twinbeam/covariance.hpp"
#include "twinbeam/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace twinbeam {

/// Per-mode power transmissions of the channel, both in [0, 1].
struct ChannelSpec {
    double t1 = 1.0;
    double t2 = 1.0;

    bool valid() const {
        return t1 >= 0.0 && t1 <= 1.0 && t2 >= 0.0 && t2 <= 1.0;
    }
};

inline CovarianceMatrix attenuate(const CovarianceMatrix& V, const ChannelSpec& spec) {
    if (!spec.valid())
        throw std::invalid_argument("attenuate: transmissions must lie in [0, 1]");

    const double x[4] = {std::sqrt(spec.t1), std::sqrt(spec.t1),
                         std::sqrt(spec.t2), std::sqrt(spec.t2)};
    const double y[4] = {1.0 - spec.t1, 1.0 - spec.t1, 1.0 - spec.t2, 1.0 - spec.t2};

    Matrix4 m;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            m(i, j) = x[i] * x[j] * V(i, j) + (i == j ? y[i] : 0.0);
    return CovarianceMatrix(m);
}

/// Attenuate a single mode, leaving the other untouched.
inline CovarianceMatrix attenuate(const CovarianceMatrix& V, Mode mode, double t) {
    return attenuate(V, mode == Mode::One ? ChannelSpec{t, 1.0} : ChannelSpec{1.0, t});
}

/// Closed form for the Duan combination after even attenuation of both
/// beams: T (p_minus + q_plus) + 2 (1 - T). Must agree with
/// duan_sum(attenuate(embed(v), {T, T})) exactly up to rounding; the test
/// suite enforces 1e-12.
inline double duan_after_symmetric_loss(const TwinBeamVariances& v, double t) {
    if (t < 0.0 || t > 1.0)
        throw std::invalid_argument("duan_after_symmetric_loss: T must lie in [0, 1]");
    return t * (v.p_minus + v.q_plus) + 2.0 * (1.0 - t);
}

/// For a state produced by the uneven channel `spec`, apply the extra loss
/// that equalizes both arms at min(t1, t2). Composition of power
/// transmissions is multiplicative, so the combined channel equals a single
/// symmetric attenuation.
inline CovarianceMatrix rebalance(const CovarianceMatrix& V, const ChannelSpec& spec) {
    if (!spec.valid())
        throw std::invalid_argument("rebalance: transmissions must lie in [0, 1]");
    if (spec.t1 == spec.t2)
        throw std::invalid_argument("rebalance: transmissions are already equal");
    const double t = std::min(spec.t1, spec.t2);
    return attenuate(V, ChannelSpec{t / spec.t1, t / spec.t2});
}

}  // namespace twinbeam
