#include "twinbeam/io.hpp"
#include "twinbeam/covariance.hpp"
#include "twinbeam/esd.hpp"
#include "twinbeam/ingest.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace twinbeam;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("twinbeam_io_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("state files") {
    TempDir dir;

    SECTION("variances form round trips") {
        const TwinBeamVariances v{0.5, 2.1, 1.7, 2.05};
        io::save_state_file(dir.file("v.json"), v, "fragile");
        const io::StateFile s = io::load_state_file(dir.file("v.json"));
        REQUIRE(s.variances.has_value());
        REQUIRE_FALSE(s.matrix.has_value());
        REQUIRE(s.label == "fragile");
        REQUIRE(s.variances->p_minus == v.p_minus);
        REQUIRE(s.variances->q_minus == v.q_minus);
        REQUIRE(io::state_to_covariance(s) == embed(v));
    }

    SECTION("matrix form round trips bitwise") {
        const CovarianceMatrix m = embed({0.5, 2.1, 1.7, 2.05});
        io::save_state_file(dir.file("m.json"), m);
        const io::StateFile s = io::load_state_file(dir.file("m.json"));
        REQUIRE(s.matrix.has_value());
        REQUIRE(io::state_to_covariance(s) == m);
    }

    SECTION("missing file") {
        REQUIRE_THROWS_AS(io::load_state_file(dir.file("absent.json")), std::runtime_error);
    }

    SECTION("malformed JSON") {
        io::write_text_file(dir.file("bad.json"), "{not json");
        REQUIRE_THROWS_AS(io::load_state_file(dir.file("bad.json")), std::invalid_argument);
    }

    SECTION("schema violations") {
        io::write_text_file(dir.file("none.json"), R"({"label": "x"})");
        REQUIRE_THROWS_AS(io::load_state_file(dir.file("none.json")), std::invalid_argument);

        io::write_text_file(dir.file("both.json"),
                            R"({"variances": {"p_minus":1,"p_plus":1,"q_plus":1,"q_minus":1},
                                "matrix": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]})");
        REQUIRE_THROWS_AS(io::load_state_file(dir.file("both.json")), std::invalid_argument);

        io::write_text_file(dir.file("short.json"), R"({"matrix": [[1,0],[0,1]]})");
        REQUIRE_THROWS_AS(io::load_state_file(dir.file("short.json")), std::invalid_argument);

        io::write_text_file(dir.file("missing_key.json"),
                            R"({"variances": {"p_minus":1,"p_plus":1,"q_plus":1}})");
        REQUIRE_THROWS_AS(io::load_state_file(dir.file("missing_key.json")),
                          std::invalid_argument);
    }

    SECTION("asymmetric matrix is rejected when materialized") {
        io::write_text_file(dir.file("asym.json"),
                            R"({"matrix": [[1,0.3,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]})");
        const io::StateFile s = io::load_state_file(dir.file("asym.json"));
        REQUIRE_THROWS_AS(io::state_to_covariance(s), std::invalid_argument);
    }

    SECTION("extra keys are ignored, so reports load as states") {
        io::write_text_file(
            dir.file("report.json"),
            R"({"matrix": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]], "nu_min": 1.0,
                "gaussianity": {"pass": true}})");
        REQUIRE(io::state_to_covariance(io::load_state_file(dir.file("report.json"))) ==
                CovarianceMatrix::vacuum());
    }
}

TEST_CASE("quadrature CSV") {
    TempDir dir;

    SECTION("round trips losslessly") {
        const QuadratureRecord rec =
            synthesize_record(embed({0.5, 2.1, 1.7, 2.05}), 200, 5);
        io::save_quadrature_csv(dir.file("r.csv"), rec);
        const QuadratureRecord back = io::load_quadrature_csv(dir.file("r.csv"));
        REQUIRE(back.samples == rec.samples);
    }

    SECTION("header is validated") {
        io::write_text_file(dir.file("h.csv"), "a,b,c,d\n1,2,3,4\n");
        REQUIRE_THROWS_AS(io::load_quadrature_csv(dir.file("h.csv")), std::invalid_argument);
    }

    SECTION("field count and numeric format are validated") {
        io::write_text_file(dir.file("narrow.csv"), "p1,q1,p2,q2\n1,2,3\n");
        REQUIRE_THROWS_AS(io::load_quadrature_csv(dir.file("narrow.csv")),
                          std::invalid_argument);

        io::write_text_file(dir.file("wide.csv"), "p1,q1,p2,q2\n1,2,3,4,5\n");
        REQUIRE_THROWS_AS(io::load_quadrature_csv(dir.file("wide.csv")),
                          std::invalid_argument);

        io::write_text_file(dir.file("alpha.csv"), "p1,q1,p2,q2\n1,2,x,4\n");
        REQUIRE_THROWS_AS(io::load_quadrature_csv(dir.file("alpha.csv")),
                          std::invalid_argument);
    }

    SECTION("tolerates CRLF and blank trailing lines") {
        io::write_text_file(dir.file("crlf.csv"), "p1,q1,p2,q2\r\n1,2,3,4\r\n\r\n");
        const QuadratureRecord rec = io::load_quadrature_csv(dir.file("crlf.csv"));
        REQUIRE(rec.samples.size() == 1);
        REQUIRE(rec.samples[0] == std::array<double, 4>{1, 2, 3, 4});
    }
}

TEST_CASE("analysis product emitters") {
    SECTION("sweep CSV has one row per grid point") {
        const SweepCurve curve =
            transmission_sweep(embed({0.5, 2.1, 1.7, 2.05}), Mode::One, 16);
        std::ostringstream out;
        io::write_sweep_csv(out, curve);
        std::istringstream in(out.str());
        std::string line;
        REQUIRE(std::getline(in, line));
        REQUIRE(line == "transmission,nu_min");
        int rows = 0;
        while (std::getline(in, line))
            if (!line.empty()) ++rows;
        REQUIRE(rows == 16);
    }

    SECTION("sweep JSON carries the grid") {
        const SweepCurve curve =
            transmission_sweep(embed({0.5, 2.1, 1.7, 2.05}), Mode::One, 16);
        const io::json j = io::sweep_to_json(curve, "demo");
        REQUIRE(j.at("label") == "demo");
        REQUIRE(j.at("points").size() == 16);
        REQUIRE(j.at("points").at(0).at("transmission") == 1.0);
    }

    SECTION("region map emitters agree on the cell count") {
        RegionMapConfig cfg;
        cfg.n_p_minus = 5;
        cfg.n_q_plus = 7;
        const RegionMap map = region_map(cfg);

        std::ostringstream out;
        io::write_region_map_csv(out, map);
        std::istringstream in(out.str());
        std::string line;
        std::getline(in, line);  // header
        int rows = 0;
        while (std::getline(in, line))
            if (!line.empty()) ++rows;
        REQUIRE(rows == 35);

        const io::json j = io::region_map_to_json(map);
        REQUIRE(j.at("cells").size() == 35);
        REQUIRE(j.at("p_minus_axis").size() == 5);
    }

    SECTION("classification JSON carries the witnesses") {
        const Classification c = classify({0.5, 2.1, 1.7, 2.05});
        const io::json j = io::classification_to_json(c);
        REQUIRE(j.at("region") == "fragile_entangled");
        REQUIRE(j.at("region_code") == 2);
        REQUIRE(j.at("decided_by") == "analytic");
        REQUIRE_FALSE(j.at("critical_transmission").is_null());
        REQUIRE(j.at("w").at("esd_quantity").get<double>() ==
                Catch::Approx(0.3385).margin(1e-12));
    }
}
