#pragma once

// Entanglement-sudden-death analysis: the analytic W-quantity condition,
// the brute-force transmission-sweep oracle that arbitrates it, the
// critical-transmission root finder, and the state-space region map.

#include "twinbeam/channels.hpp"
#include "twinbeam/covariance.hpp"
#include "twinbeam/criteria.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace twinbeam {

/// The W quantities of the analytic ESD condition. For the symmetric,
/// cross-correlation-free family the sign of w_prod decides entanglement,
/// and states undergoing sudden death under single-beam loss satisfy
/// 0 < esd_quantity (the stated upper bound < 1 is not reliable on its
/// own; see classify_analytic).
struct WQuantities {
    double w_sum;         // p_minus + q_plus - 2
    double w_bar_sum;     // p_plus + q_minus - 2
    double w_prod;        // p_minus * q_plus - 1
    double w_bar_prod;    // p_plus * q_minus - 1
    double esd_quantity;  // w_prod * w_bar_sum + w_bar_prod * w_sum
};

inline WQuantities w_quantities(const TwinBeamVariances& v) {
    WQuantities w;
    w.w_sum = v.p_minus + v.q_plus - 2.0;
    w.w_bar_sum = v.p_plus + v.q_minus - 2.0;
    w.w_prod = v.p_minus * v.q_plus - 1.0;
    w.w_bar_prod = v.p_plus * v.q_minus - 1.0;
    w.esd_quantity = w.w_prod * w.w_bar_sum + w.w_bar_prod * w.w_sum;
    return w;
}

// Region codes are stable and appear verbatim in CSV/JSON output.
enum class Region : int {
    Unphysical = 0,
    Separable = 1,
    FragileEntangled = 2,  // entangled now, disentangles at finite loss
    RobustEntangled = 3,   // entangled for every transmission T > 0
};

inline const char* region_name(Region r) {
    switch (r) {
        case Region::Unphysical: return "unphysical";
        case Region::Separable: return "separable";
        case Region::FragileEntangled: return "fragile_entangled";
        case Region::RobustEntangled: return "robust_entangled";
    }
    return "unknown";
}

enum class Classifier { Analytic, Oracle };

struct Classification {
    Region region = Region::Unphysical;
    std::optional<WQuantities> w;  // present when the state has a twin-beam description
    double ppt_nu_min = std::numeric_limits<double>::quiet_NaN();  // at T = 1
    std::optional<double> critical_transmission;  // fragile states only
    bool analytic_indeterminate = false;
    Classifier decided_by = Classifier::Analytic;
};

struct ClassifyOptions {
    Mode mode = Mode::One;      // which beam the reference lossy channel acts on
    int oracle_points = 512;    // sweep-grid size of the oracle
    double oracle_t_min = 1e-6; // smallest probed transmission
    double physicality_tol = kPhysicalityTol;
    double family_tol = kSymmetryTol;  // matrix -> variances reduction
    double bisection_tol = 1e-9;       // absolute, in T
};

/// Descending transmission grid for the oracle: oracle_points values
/// log-spaced from 1 down to t_min, where the eigenvalue curvature
/// concentrates.
inline std::vector<double> oracle_transmission_grid(int n_points, double t_min) {
    if (n_points < 2)
        throw std::invalid_argument("oracle_transmission_grid: need at least 2 points");
    if (!(t_min > 0.0 && t_min < 1.0))
        throw std::invalid_argument("oracle_transmission_grid: t_min must lie in (0, 1)");
    std::vector<double> grid(static_cast<std::size_t>(n_points));
    const double log_min = std::log(t_min);
    for (int k = 0; k < n_points; ++k)
        grid[static_cast<std::size_t>(k)] =
            std::exp(log_min * static_cast<double>(k) / static_cast<double>(n_points - 1));
    grid.front() = 1.0;
    grid.back() = t_min;
    return grid;
}

/// Smallest PT symplectic eigenvalue after sending one beam through a
/// channel of transmission t.
inline double nu_min_after_loss(const CovarianceMatrix& V, Mode mode, double t) {
    return ppt_min_eigenvalue(attenuate(V, mode, t)).nu_min;
}

/// Analytic classification from the W quantities alone:
///   w_prod >= 0                     -> Separable
///   w_prod < 0, esd_quantity <= 0   -> RobustEntangled
///   w_prod < 0, 0 < esd_quantity < 1 -> FragileEntangled
///   w_prod < 0, esd_quantity >= 1   -> RobustEntangled with the
///       analytic_indeterminate flag set: the bound's derivation does not
///       cover this regime and the sweep oracle must arbitrate.
/// Unphysical inputs classify as Unphysical rather than throwing, so grid
/// scans stay total.
inline Classification classify_analytic(const TwinBeamVariances& v,
                                        double tol = kPhysicalityTol) {
    Classification c;
    c.decided_by = Classifier::Analytic;
    if (v.all_positive()) c.w = w_quantities(v);
    if (!v.is_physical(tol)) {
        c.region = Region::Unphysical;
        return c;
    }

    c.ppt_nu_min = std::sqrt(std::min(v.p_minus * v.q_plus, v.p_plus * v.q_minus));
    const WQuantities& w = *c.w;
    if (w.w_prod >= 0.0) {
        c.region = Region::Separable;
    } else if (w.esd_quantity <= 0.0) {
        c.region = Region::RobustEntangled;
    } else if (w.esd_quantity < 1.0) {
        c.region = Region::FragileEntangled;
    } else {
        c.region = Region::RobustEntangled;
        c.analytic_indeterminate = true;
    }
    return c;
}

/// Root of nu_min(T) = 1 on (0, 1) for a state entangled at T = 1:
/// bracketed on the oracle grid, refined by bisection to opts.bisection_tol
/// in T. Returns nullopt for robust states (no crossing on the grid).
/// Throws if the state is already separable at T = 1.
inline std::optional<double> critical_transmission(const CovarianceMatrix& V, Mode mode,
                                                   const ClassifyOptions& opts = {}) {
    if (ppt_min_eigenvalue(V).nu_min >= 1.0)
        throw std::invalid_argument(
            "critical_transmission: state is separable at T = 1; nothing to cross");

    const std::vector<double> grid =
        oracle_transmission_grid(opts.oracle_points, opts.oracle_t_min);
    double t_hi = grid.front();  // nu < 1 here
    std::optional<double> bracket_lo;
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double t = grid[k];
        if (nu_min_after_loss(V, mode, t) >= 1.0) {
            bracket_lo = t;
            break;
        }
        t_hi = t;
    }
    if (!bracket_lo) return std::nullopt;

    double lo = *bracket_lo;  // nu >= 1 (separable side)
    double hi = t_hi;         // nu < 1 (entangled side)
    while (hi - lo > opts.bisection_tol) {
        const double mid = 0.5 * (lo + hi);
        if (nu_min_after_loss(V, mode, mid) < 1.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

/// Ground-truth classification by direct computation: evaluate nu_min(T)
/// over the descending oracle grid. Separable if already separable at
/// T = 1; Fragile if the eigenvalue reaches 1 at some probed T in (0, 1),
/// refined by critical_transmission; Robust otherwise. Arbiter whenever
/// the analytic condition is indeterminate or disputed.
inline Classification classify_oracle(const CovarianceMatrix& V, Mode mode = Mode::One,
                                      const ClassifyOptions& opts = {}) {
    Classification c;
    c.decided_by = Classifier::Oracle;
    try {
        c.w = w_quantities(extract(V, opts.family_tol));
    } catch (const std::invalid_argument&) {
        // not in the twin-beam family; the sweep needs no reduction
    }

    if (!is_physical(V, opts.physicality_tol)) {
        c.region = Region::Unphysical;
        return c;
    }

    c.ppt_nu_min = ppt_min_eigenvalue(V).nu_min;
    if (c.ppt_nu_min >= 1.0) {
        c.region = Region::Separable;
        return c;
    }

    const std::vector<double> grid =
        oracle_transmission_grid(opts.oracle_points, opts.oracle_t_min);
    bool crosses = false;
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (nu_min_after_loss(V, mode, grid[k]) >= 1.0) {
            crosses = true;
            break;
        }
    }
    if (crosses) {
        c.region = Region::FragileEntangled;
        c.critical_transmission = critical_transmission(V, mode, opts);
    } else {
        c.region = Region::RobustEntangled;
    }
    return c;
}

/// Composite classifier: analytic first, oracle arbitration when the
/// analytic condition is indeterminate. Fragile states get their critical
/// transmission attached either way.
inline Classification classify(const TwinBeamVariances& v, const ClassifyOptions& opts = {}) {
    Classification c = classify_analytic(v, opts.physicality_tol);
    if (c.region == Region::Unphysical) return c;
    if (c.analytic_indeterminate) {
        Classification o = classify_oracle(embed(v, opts.physicality_tol), opts.mode, opts);
        o.analytic_indeterminate = true;
        o.w = c.w;
        return o;
    }
    if (c.region == Region::FragileEntangled)
        c.critical_transmission =
            critical_transmission(embed(v, opts.physicality_tol), opts.mode, opts);
    return c;
}

/// Matrix entry point: reduce to twin-beam variances when the matrix is in
/// that family (within opts.family_tol) and use the composite classifier;
/// otherwise fall back to the oracle directly.
inline Classification classify_matrix(const CovarianceMatrix& V,
                                      const ClassifyOptions& opts = {}) {
    try {
        return classify(extract(V, opts.family_tol), opts);
    } catch (const std::invalid_argument&) {
        return classify_oracle(V, opts.mode, opts);
    }
}

struct SweepPoint {
    double transmission;
    double nu_min;
};

/// (T, nu_min) curve on a uniform descending grid from T = 1 down to
/// T = 1/n_points, the smallest positive grid point.
struct SweepCurve {
    Mode mode = Mode::One;
    std::vector<SweepPoint> points;
};

inline SweepCurve transmission_sweep(const CovarianceMatrix& V, Mode mode, int n_points) {
    if (n_points < 2)
        throw std::invalid_argument("transmission_sweep: need at least 2 points");

    SweepCurve curve;
    curve.mode = mode;
    curve.points.reserve(static_cast<std::size_t>(n_points));
    const double eps = 1.0 / static_cast<double>(n_points);
    for (int k = 0; k < n_points; ++k) {
        const double t =
            1.0 - (1.0 - eps) * static_cast<double>(k) / static_cast<double>(n_points - 1);
        curve.points.push_back({t, nu_min_after_loss(V, mode, t)});
    }
    return curve;
}

struct RegionMapConfig {
    // Defaults reproduce the state-space map around the constant
    // p_minus ~ 0.5 line with the standard fixed pair.
    double p_minus_lo = 0.40;
    double p_minus_hi = 0.80;
    double q_plus_lo = 0.40;
    double q_plus_hi = 3.00;
    int n_p_minus = 81;
    int n_q_plus = 131;
    double fixed_p_plus = 2.1;
    double fixed_q_minus = 2.05;
};

struct RegionCell {
    double p_minus;
    double q_plus;
    Region region;
    bool duan_violated;   // p_minus + q_plus < 2, the dashed-line marker
    double w_prod;
    double esd_quantity;
    double ppt_nu_min;    // NaN for unphysical cells
    bool oracle_decided;  // analytic condition was indeterminate here
};

/// Cells in row-major order: p_minus ascending (outer), q_plus ascending
/// (inner). Each cell is classified independently, so execution order is
/// irrelevant to the result.
struct RegionMap {
    RegionMapConfig config;
    std::vector<double> p_minus_axis;
    std::vector<double> q_plus_axis;
    std::vector<RegionCell> cells;

    const RegionCell& at(int i_p, int i_q) const {
        return cells[static_cast<std::size_t>(i_p) *
                         static_cast<std::size_t>(config.n_q_plus) +
                     static_cast<std::size_t>(i_q)];
    }
};

inline std::vector<double> uniform_axis(double lo, double hi, int n) {
    std::vector<double> axis(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        axis[static_cast<std::size_t>(k)] =
            n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    return axis;
}

inline RegionMap region_map(const RegionMapConfig& cfg, const ClassifyOptions& opts = {}) {
    if (!(cfg.p_minus_lo > 0.0 && cfg.q_plus_lo > 0.0))
        throw std::invalid_argument("region_map: ranges must be positive");
    if (cfg.p_minus_hi < cfg.p_minus_lo || cfg.q_plus_hi < cfg.q_plus_lo)
        throw std::invalid_argument("region_map: empty range");
    if (cfg.n_p_minus < 1 || cfg.n_q_plus < 1)
        throw std::invalid_argument("region_map: grid must have at least one cell");
    if (!(cfg.fixed_p_plus > 0.0 && cfg.fixed_q_minus > 0.0))
        throw std::invalid_argument("region_map: fixed pair must be positive");

    RegionMap map;
    map.config = cfg;
    map.p_minus_axis = uniform_axis(cfg.p_minus_lo, cfg.p_minus_hi, cfg.n_p_minus);
    map.q_plus_axis = uniform_axis(cfg.q_plus_lo, cfg.q_plus_hi, cfg.n_q_plus);
    map.cells.reserve(map.p_minus_axis.size() * map.q_plus_axis.size());

    bool any_physical = false;
    for (double pm : map.p_minus_axis) {
        for (double qp : map.q_plus_axis) {
            const TwinBeamVariances v{pm, cfg.fixed_p_plus, qp, cfg.fixed_q_minus};
            const Classification c = classify(v, opts);
            RegionCell cell;
            cell.p_minus = pm;
            cell.q_plus = qp;
            cell.region = c.region;
            cell.duan_violated = pm + qp < 2.0;
            const WQuantities w = w_quantities(v);
            cell.w_prod = w.w_prod;
            cell.esd_quantity = w.esd_quantity;
            cell.ppt_nu_min = c.ppt_nu_min;
            cell.oracle_decided = c.analytic_indeterminate;
            any_physical = any_physical || c.region != Region::Unphysical;
            map.cells.push_back(cell);
        }
    }
    if (!any_physical)
        throw unphysical_error("region_map: every cell of the grid is unphysical", 0.0);
    return map;
}

}  // namespace twinbeam
