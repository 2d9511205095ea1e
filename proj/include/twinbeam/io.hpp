#pragma once

// File formats.
//
// State file (JSON): exactly one of
//   {"variances": {"p_minus": f, "p_plus": f, "q_plus": f, "q_minus": f}}
//   {"matrix": [[...], [...], [...], [...]]}    # 4x4, row-major, (p1,q1,p2,q2)
// plus an optional "label". Extra keys are ignored, so reports written by
// the estimate pipeline are themselves valid state files.
//
// Quadrature sample file (CSV): header "p1,q1,p2,q2", one sample per row.

#include "twinbeam/covariance.hpp"
#include "twinbeam/criteria.hpp"
#include "twinbeam/esd.hpp"
#include "twinbeam/ingest.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace twinbeam::io {

using json = nlohmann::ordered_json;

inline std::string format_double(double x, const char* fmt = "%.12g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, x);
    return buf;
}

// ---------------------------------------------------------------------------
// state files

struct StateFile {
    std::optional<TwinBeamVariances> variances;
    std::optional<Matrix4> matrix;
    std::string label;
};

inline StateFile parse_state_json(const json& j) try {
    StateFile s;
    const bool has_v = j.contains("variances");
    const bool has_m = j.contains("matrix");
    if (has_v == has_m)
        throw std::invalid_argument(
            "state file: exactly one of \"variances\" or \"matrix\" is required");

    if (has_v) {
        const json& v = j.at("variances");
        s.variances = TwinBeamVariances{
            v.at("p_minus").get<double>(), v.at("p_plus").get<double>(),
            v.at("q_plus").get<double>(), v.at("q_minus").get<double>()};
    } else {
        const json& rows = j.at("matrix");
        if (!rows.is_array() || rows.size() != 4)
            throw std::invalid_argument("state file: \"matrix\" must be 4 rows of 4");
        Matrix4 m;
        for (int i = 0; i < 4; ++i) {
            const json& row = rows.at(static_cast<std::size_t>(i));
            if (!row.is_array() || row.size() != 4)
                throw std::invalid_argument("state file: \"matrix\" must be 4 rows of 4");
            for (int k = 0; k < 4; ++k)
                m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
        }
        s.matrix = m;
    }
    if (j.contains("label")) s.label = j.at("label").get<std::string>();
    return s;
} catch (const json::exception& e) {
    throw std::invalid_argument(std::string("state file: ") + e.what());
}

inline StateFile load_state_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open state file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("state file " + path + ": " + e.what());
    }
    return parse_state_json(j);
}

/// Materialize the state; symmetry_tol admits estimated matrices whose
/// rows carry rounding noise, physicality_tol gates the variances form.
inline CovarianceMatrix state_to_covariance(const StateFile& s,
                                            double physicality_tol = kPhysicalityTol,
                                            double symmetry_tol = kSymmetryTol) {
    if (s.variances) return embed(*s.variances, physicality_tol);
    return CovarianceMatrix(*s.matrix, symmetry_tol);
}

inline json variances_to_json(const TwinBeamVariances& v) {
    return json{{"p_minus", v.p_minus},
                {"p_plus", v.p_plus},
                {"q_plus", v.q_plus},
                {"q_minus", v.q_minus}};
}

inline json matrix_to_json(const Matrix4& m) {
    json rows = json::array();
    for (int i = 0; i < 4; ++i) {
        json row = json::array();
        for (int k = 0; k < 4; ++k) row.push_back(m(i, k));
        rows.push_back(row);
    }
    return rows;
}

inline void save_state_file(const std::string& path, const TwinBeamVariances& v,
                            const std::string& label = {}) {
    json j{{"variances", variances_to_json(v)}};
    if (!label.empty()) j["label"] = label;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write state file: " + path);
    out << j.dump(2) << '\n';
}

inline void save_state_file(const std::string& path, const CovarianceMatrix& V,
                            const std::string& label = {}) {
    json j{{"matrix", matrix_to_json(V.matrix())}};
    if (!label.empty()) j["label"] = label;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write state file: " + path);
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// quadrature sample CSV

inline void save_quadrature_csv(const std::string& path, const QuadratureRecord& r) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write sample file: " + path);
    out << "p1,q1,p2,q2\n";
    for (const auto& s : r.samples)
        out << format_double(s[0], "%.17g") << ',' << format_double(s[1], "%.17g") << ','
            << format_double(s[2], "%.17g") << ',' << format_double(s[3], "%.17g") << '\n';
}

inline QuadratureRecord load_quadrature_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sample file: " + path);

    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("sample file " + path + ": empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "p1,q1,p2,q2")
        throw std::invalid_argument("sample file " + path +
                                    ": expected header \"p1,q1,p2,q2\", got \"" + line + "\"");

    QuadratureRecord r;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::array<double, 4> s{};
        std::istringstream row(line);
        std::string cell;
        for (int i = 0; i < 4; ++i) {
            if (!std::getline(row, cell, ','))
                throw std::invalid_argument("sample file " + path + ": line " +
                                            std::to_string(lineno) + " has fewer than 4 fields");
            std::size_t used = 0;
            try {
                s[static_cast<std::size_t>(i)] = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw std::invalid_argument("sample file " + path + ": line " +
                                            std::to_string(lineno) + ": bad number \"" + cell +
                                            "\"");
            }
            if (used != cell.size())
                throw std::invalid_argument("sample file " + path + ": line " +
                                            std::to_string(lineno) + ": bad number \"" + cell +
                                            "\"");
        }
        if (std::getline(row, cell, ','))
            throw std::invalid_argument("sample file " + path + ": line " +
                                        std::to_string(lineno) + " has more than 4 fields");
        r.samples.push_back(s);
    }
    return r;
}

// ---------------------------------------------------------------------------
// analysis products

inline json w_to_json(const WQuantities& w) {
    return json{{"w_sum", w.w_sum},
                {"w_bar_sum", w.w_bar_sum},
                {"w_prod", w.w_prod},
                {"w_bar_prod", w.w_bar_prod},
                {"esd_quantity", w.esd_quantity}};
}

inline json classification_to_json(const Classification& c) {
    json j;
    j["region"] = region_name(c.region);
    j["region_code"] = static_cast<int>(c.region);
    j["decided_by"] = c.decided_by == Classifier::Oracle ? "oracle" : "analytic";
    j["analytic_indeterminate"] = c.analytic_indeterminate;
    if (std::isfinite(c.ppt_nu_min)) j["nu_min"] = c.ppt_nu_min;
    if (c.w) j["w"] = w_to_json(*c.w);
    if (c.critical_transmission)
        j["critical_transmission"] = *c.critical_transmission;
    else
        j["critical_transmission"] = nullptr;
    return j;
}

inline void write_sweep_csv(std::ostream& out, const SweepCurve& curve) {
    out << "transmission,nu_min\n";
    for (const auto& p : curve.points)
        out << format_double(p.transmission) << ',' << format_double(p.nu_min) << '\n';
}

inline json sweep_to_json(const SweepCurve& curve, const std::string& label = {}) {
    json j;
    if (!label.empty()) j["label"] = label;
    j["mode"] = static_cast<int>(curve.mode);
    j["n_points"] = curve.points.size();
    json pts = json::array();
    for (const auto& p : curve.points)
        pts.push_back(json{{"transmission", p.transmission}, {"nu_min", p.nu_min}});
    j["points"] = pts;
    return j;
}

inline void write_region_map_csv(std::ostream& out, const RegionMap& map) {
    out << "p_minus,q_plus,region_code,region,duan_violated,w_prod,esd_quantity,nu_min,"
           "oracle_decided\n";
    for (const auto& c : map.cells) {
        out << format_double(c.p_minus) << ',' << format_double(c.q_plus) << ','
            << static_cast<int>(c.region) << ',' << region_name(c.region) << ','
            << (c.duan_violated ? 1 : 0) << ',' << format_double(c.w_prod) << ','
            << format_double(c.esd_quantity) << ',';
        if (std::isfinite(c.ppt_nu_min)) out << format_double(c.ppt_nu_min);
        out << ',' << (c.oracle_decided ? 1 : 0) << '\n';
    }
}

inline json region_map_to_json(const RegionMap& map) {
    json j;
    j["fixed_p_plus"] = map.config.fixed_p_plus;
    j["fixed_q_minus"] = map.config.fixed_q_minus;
    j["p_minus_axis"] = map.p_minus_axis;
    j["q_plus_axis"] = map.q_plus_axis;
    json cells = json::array();
    for (const auto& c : map.cells) {
        json cell{{"p_minus", c.p_minus},
                  {"q_plus", c.q_plus},
                  {"region_code", static_cast<int>(c.region)},
                  {"region", region_name(c.region)},
                  {"duan_violated", c.duan_violated},
                  {"w_prod", c.w_prod},
                  {"esd_quantity", c.esd_quantity},
                  {"oracle_decided", c.oracle_decided}};
        if (std::isfinite(c.ppt_nu_min)) cell["nu_min"] = c.ppt_nu_min;
        cells.push_back(cell);
    }
    j["cells"] = cells;
    return j;
}

inline json estimate_to_json(const CovarianceEstimate& est) {
    json j;
    j["n_samples"] = est.n_samples;
    j["matrix"] = matrix_to_json(est.matrix.matrix());
    j["std_errors"] = matrix_to_json(est.std_errors);
    j["nu_min"] = est.ppt_nu_min;
    j["nu_min_std_error"] = est.ppt_nu_min_std_error;
    j["state_nu_min"] = est.state_nu_min;
    j["physical"] = est.physical;
    return j;
}

inline json gaussianity_to_json(const GaussianityReport& g) {
    json j;
    j["pass"] = g.pass;
    j["skewness_threshold"] = g.skewness_threshold;
    j["kurtosis_threshold"] = g.kurtosis_threshold;
    json rows = json::array();
    for (const auto& row : g.rows)
        rows.push_back(json{{"channel", row.channel},
                            {"skewness", row.skewness},
                            {"excess_kurtosis", row.excess_kurtosis},
                            {"pass", row.pass}});
    j["channels"] = rows;
    return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << text;
}

}  // namespace twinbeam::io
