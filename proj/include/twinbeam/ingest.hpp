#pragma once

// Covariance reconstruction from joint quadrature samples, Gaussianity
// screening via higher moments, and the synthetic sampler used for
// round-trip validation. Replaces the measurement apparatus: records come
// either from the seeded sampler here or from external CSV files.

#include "twinbeam/covariance.hpp"
#include "twinbeam/criteria.hpp"
#include "twinbeam/random.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace twinbeam {

class too_few_samples_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Ordered joint quadrature samples (p1, q1, p2, q2) in SQL units.
struct QuadratureRecord {
    std::vector<std::array<double, 4>> samples;
    std::string label;

    std::size_t size() const { return samples.size(); }
};

/// Zero-mean multivariate normal draws with covariance V, via the Cholesky
/// factor. Identical (V, N, seed) yield an identical record bit-for-bit.
inline QuadratureRecord synthesize_record(const CovarianceMatrix& V, std::size_t n,
                                          std::uint64_t seed,
                                          double physicality_tol = kPhysicalityTol) {
    if (n < 1)
        throw std::invalid_argument("synthesize_record: need at least one sample");
    if (!is_physical(V, physicality_tol))
        throw unphysical_error("synthesize_record: unphysical covariance matrix",
                               symplectic_eigenvalues(V).nu_min);

    const Eigen::LLT<Matrix4> llt(V.matrix());
    const Matrix4 L = llt.matrixL();

    QuadratureRecord record;
    record.samples.resize(n);
    SampleRng rng(seed);
    for (std::size_t k = 0; k < n; ++k) {
        Eigen::Vector4d z;
        for (int i = 0; i < 4; ++i) z(i) = rng.normal();
        const Eigen::Vector4d x = L * z;
        record.samples[k] = {x(0), x(1), x(2), x(3)};
    }
    return record;
}

struct EstimateOptions {
    std::size_t min_samples = 16;
    std::size_t bootstrap_resamples = 200;  // 0 disables the bootstrap
    std::uint64_t seed = 0;
    double physicality_tol = 1e-3;  // finite-sample scale
};

struct CovarianceEstimate {
    CovarianceMatrix matrix;
    Matrix4 std_errors;        // per-entry bootstrap standard errors
    std::size_t n_samples = 0;
    double ppt_nu_min = 0.0;   // of the point estimate
    double ppt_nu_min_std_error = 0.0;
    double state_nu_min = 0.0; // smallest Williamson eigenvalue of the estimate
    bool physical = false;     // state_nu_min >= 1 - physicality_tol; reported, never repaired
};

namespace detail {

inline void check_record(const QuadratureRecord& r, std::size_t min_samples,
                         const char* who) {
    if (r.size() < min_samples)
        throw too_few_samples_error(std::string(who) + ": need at least " +
                                    std::to_string(min_samples) + " samples, got " +
                                    std::to_string(r.size()));
    for (const auto& s : r.samples)
        for (double x : s)
            if (!std::isfinite(x))
                throw std::invalid_argument(std::string(who) + ": non-finite sample");
}

/// Unbiased sample covariance (divisor N-1) of the rows selected by
/// `index`, exactly symmetric by construction.
template <typename IndexFn>
Matrix4 sample_covariance(const QuadratureRecord& r, std::size_t n, IndexFn&& index) {
    Eigen::Vector4d mean = Eigen::Vector4d::Zero();
    for (std::size_t k = 0; k < n; ++k) {
        const auto& s = r.samples[index(k)];
        mean += Eigen::Vector4d(s[0], s[1], s[2], s[3]);
    }
    mean /= static_cast<double>(n);

    Matrix4 cov = Matrix4::Zero();
    for (std::size_t k = 0; k < n; ++k) {
        const auto& s = r.samples[index(k)];
        const Eigen::Vector4d d = Eigen::Vector4d(s[0], s[1], s[2], s[3]) - mean;
        for (int i = 0; i < 4; ++i)
            for (int j = i; j < 4; ++j) cov(i, j) += d(i) * d(j);
    }
    cov /= static_cast<double>(n - 1);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < i; ++j) cov(i, j) = cov(j, i);
    return cov;
}

}  // namespace detail

/// Mean-subtracted unbiased sample covariance with nonparametric bootstrap
/// standard errors. The estimate is reported as-is; physicality is flagged,
/// not repaired.
inline CovarianceEstimate estimate_covariance(const QuadratureRecord& r,
                                              const EstimateOptions& opts = {}) {
    detail::check_record(r, std::max<std::size_t>(opts.min_samples, 2), "estimate_covariance");
    const std::size_t n = r.size();

    const Matrix4 point = detail::sample_covariance(r, n, [](std::size_t k) { return k; });

    CovarianceEstimate est{CovarianceMatrix(point), Matrix4::Zero(), n, 0.0, 0.0, 0.0, false};
    est.ppt_nu_min = ppt_min_eigenvalue(est.matrix).nu_min;
    est.state_nu_min = symplectic_eigenvalues(est.matrix).nu_min;
    est.physical = est.state_nu_min >= 1.0 - opts.physicality_tol;

    const std::size_t b_total = opts.bootstrap_resamples;
    if (b_total == 0) return est;

    SampleRng rng(opts.seed);
    std::vector<std::size_t> draw(n);
    Matrix4 sum = Matrix4::Zero();
    Matrix4 sum_sq = Matrix4::Zero();
    double nu_sum = 0.0, nu_sum_sq = 0.0;
    std::size_t nu_count = 0;
    for (std::size_t b = 0; b < b_total; ++b) {
        for (std::size_t k = 0; k < n; ++k)
            draw[k] = static_cast<std::size_t>(rng.index(n));
        const Matrix4 cov =
            detail::sample_covariance(r, n, [&](std::size_t k) { return draw[k]; });
        sum += cov;
        sum_sq += cov.cwiseProduct(cov);
        try {
            const double nu =
                ppt_min_eigenvalue(CovarianceMatrix(cov)).nu_min;
            nu_sum += nu;
            nu_sum_sq += nu * nu;
            ++nu_count;
        } catch (const std::exception&) {
            // degenerate resample; entry statistics are still valid
        }
    }

    const double nb = static_cast<double>(b_total);
    if (b_total > 1) {
        const Matrix4 var =
            (sum_sq - sum.cwiseProduct(sum) / nb) / (nb - 1.0);
        est.std_errors = var.cwiseMax(0.0).cwiseSqrt();
    }
    if (nu_count > 1) {
        const double m = nu_sum / static_cast<double>(nu_count);
        const double var = (nu_sum_sq - nu_sum * m) / (static_cast<double>(nu_count) - 1.0);
        est.ppt_nu_min_std_error = std::sqrt(std::max(var, 0.0));
    }
    return est;
}

struct GaussianityOptions {
    std::size_t min_samples = 100;
    double sigma_band = 5.0;  // width of the pass band in asymptotic sigmas
};

struct MomentRow {
    std::string channel;
    double skewness;
    double excess_kurtosis;
    bool pass;
};

/// Standardized third and fourth moments for the four channels and the
/// four EPR combinations, against thresholds sigma_band * sqrt(6/N) and
/// sigma_band * sqrt(24/N).
struct GaussianityReport {
    std::vector<MomentRow> rows;
    double skewness_threshold = 0.0;
    double kurtosis_threshold = 0.0;
    bool pass = false;
};

inline GaussianityReport gaussianity_check(const QuadratureRecord& r,
                                           const GaussianityOptions& opts = {}) {
    detail::check_record(r, std::max<std::size_t>(opts.min_samples, 4), "gaussianity_check");
    const std::size_t n = r.size();
    const double nd = static_cast<double>(n);

    GaussianityReport report;
    report.skewness_threshold = opts.sigma_band * std::sqrt(6.0 / nd);
    report.kurtosis_threshold = opts.sigma_band * std::sqrt(24.0 / nd);
    report.pass = true;

    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    const struct {
        const char* name;
        std::array<double, 4> weights;  // applied to (p1, q1, p2, q2)
    } series[8] = {
        {"p1", {1, 0, 0, 0}},
        {"q1", {0, 1, 0, 0}},
        {"p2", {0, 0, 1, 0}},
        {"q2", {0, 0, 0, 1}},
        {"p_minus", {inv_sqrt2, 0, -inv_sqrt2, 0}},
        {"p_plus", {inv_sqrt2, 0, inv_sqrt2, 0}},
        {"q_plus", {0, inv_sqrt2, 0, inv_sqrt2}},
        {"q_minus", {0, inv_sqrt2, 0, -inv_sqrt2}},
    };

    for (const auto& ch : series) {
        double mean = 0.0;
        for (const auto& s : r.samples)
            mean += ch.weights[0] * s[0] + ch.weights[1] * s[1] + ch.weights[2] * s[2] +
                    ch.weights[3] * s[3];
        mean /= nd;

        double m2 = 0.0, m3 = 0.0, m4 = 0.0;
        for (const auto& s : r.samples) {
            const double x = ch.weights[0] * s[0] + ch.weights[1] * s[1] +
                             ch.weights[2] * s[2] + ch.weights[3] * s[3] - mean;
            const double x2 = x * x;
            m2 += x2;
            m3 += x2 * x;
            m4 += x2 * x2;
        }
        m2 /= nd;
        m3 /= nd;
        m4 /= nd;

        MomentRow row;
        row.channel = ch.name;
        row.skewness = m3 / std::pow(m2, 1.5);
        row.excess_kurtosis = m4 / (m2 * m2) - 3.0;
        row.pass = std::abs(row.skewness) <= report.skewness_threshold &&
                   std::abs(row.excess_kurtosis) <= report.kurtosis_threshold;
        report.pass = report.pass && row.pass;
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace twinbeam
