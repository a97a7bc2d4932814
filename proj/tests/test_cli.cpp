#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unistd.h>

#include "contact/cli.hpp"
#include "contact/errors.hpp"
#include "contact/io.hpp"

using namespace contact;
namespace fs = std::filesystem;

namespace {

struct CaptureStdout {
    std::stringstream stream;
    std::streambuf* saved;
    CaptureStdout() : saved(std::cout.rdbuf(stream.rdbuf())) {}
    ~CaptureStdout() { std::cout.rdbuf(saved); }
    std::string text() const { return stream.str(); }
};

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("contactsim_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_quiet(const std::vector<std::string>& args, std::string* out = nullptr) {
    CaptureStdout cap;
    const int code = cli::run(args);
    if (out) *out = cap.text();
    return code;
}

} // namespace

TEST_CASE("exact-r on the 2-site torus prints the closed-form rate") {
    std::string out;
    const int code =
        run_quiet({"exact-r", "--group", "torus:2x1", "--kernel", "nn:1", "--delta", "1"}, &out);
    CHECK(code == 0);
    const auto result = nlohmann::json::parse(out);
    CHECK(std::fabs(result["r"].get<double>() - (std::sqrt(2.0) - 2.0)) < 1e-9);
}

TEST_CASE("bound-table emits 99 strictly increasing rows") {
    TempDir dir;
    std::string out;
    const int code = run_quiet(
        {"bound-table", "--gamma_grid", "0.01:0.99:0.01", "--out", dir.file("")}, &out);
    CHECK(code == 0);
    const std::string csv = read_file(dir.file("bound_table.csv"));
    CHECK(csv.rfind("gamma,eps,eps1,eps2,phi_gamma,taylor_approx,diff\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 100); // header + 99 rows
    CHECK(nlohmann::json::parse(out)["strictly_increasing"] == true);
    CHECK(fs::exists(dir.file("bound_table.csv.manifest.json")));
}

TEST_CASE("mc-survival with delta = 0 reports theta_hat = 1") {
    std::string out;
    const int code = run_quiet({"mc-survival", "--group", "z:1", "--kernel", "nn:1", "--delta",
                                "0", "--horizon", "5", "--replicas", "200", "--seed", "7"},
                               &out);
    CHECK(code == 0);
    const auto rows = nlohmann::json::parse(out);
    CHECK(rows[0]["theta_hat"].get<double>() == 1.0);
}

TEST_CASE("missing required keys exit with code 2") {
    std::string out;
    CHECK(run_quiet({"mc-survival", "--group", "z:1", "--kernel", "nn:1", "--delta", "0.5",
                     "--horizon", "5", "--replicas", "200"},
                    &out) == 2); // no seed
    CHECK(run_quiet({"exact-r", "--group", "torus:2x1", "--kernel", "nn:1"}, &out) == 2);
    CHECK(run_quiet({"no-such-command"}, &out) == 2);
}

TEST_CASE("numerical failures exit with code 3") {
    std::string out;
    // Growth estimation starves when everything dies immediately.
    CHECK(run_quiet({"mc-growth", "--group", "z:1", "--kernel", "zero", "--delta", "50",
                     "--horizon", "9", "--replicas", "200", "--seed", "3"},
                    &out) == 3);
}

TEST_CASE("config loading") {
    TempDir dir;
    SUBCASE("canonical round trip is byte identical") {
        const std::string path = dir.file("cfg.json");
        {
            std::ofstream f(path);
            f << R"({"command":"mc-survival","group":"z:1","kernel":"nn:1","delta":0.5,)"
              << R"("horizon":10,"replicas":200,"seed":42})";
        }
        const nlohmann::json canon = cli::load_config(path);
        CHECK(canon["size_cap"] == 10000); // documented default applied
        CHECK(canon["threads"] == 1);
        const std::string bytes = cli::config_to_string(canon);
        const std::string path2 = dir.file("cfg2.json");
        {
            std::ofstream f(path2, std::ios::binary);
            f << bytes;
        }
        CHECK(cli::config_to_string(cli::load_config(path2)) == bytes);
    }
    SUBCASE("unknown keys are rejected") {
        const std::string path = dir.file("bad.json");
        {
            std::ofstream f(path);
            f << R"({"command":"exact-r","group":"torus:2x1","kernel":"nn:1","delta":1,)"
              << R"("typo_key":3})";
        }
        CHECK_THROWS_AS(cli::load_config(path), UsageError);
        std::string out;
        CHECK(run_quiet({"exact-r", "--config", path}, &out) == 2);
    }
    SUBCASE("wrong types are rejected") {
        const std::string path = dir.file("bad2.json");
        {
            std::ofstream f(path);
            f << R"({"command":"exact-r","group":"torus:2x1","kernel":"nn:1","delta":"one"})";
        }
        CHECK_THROWS_AS(cli::load_config(path), UsageError);
    }
    SUBCASE("flags override config keys") {
        const std::string path = dir.file("cfg3.json");
        {
            std::ofstream f(path);
            f << R"({"command":"exact-r","group":"torus:1x1","kernel":"zero","delta":0.25})";
        }
        std::string out;
        CHECK(run_quiet({"exact-r", "--config", path, "--delta", "0.75"}, &out) == 0);
        CHECK(nlohmann::json::parse(out)["r"].get<double>() == -0.75);
    }
}

TEST_CASE("delta grids expand inclusively") {
    CHECK(io::parse_range("0:2:0.1").size() == 21);
    CHECK(io::parse_range("0.01:0.99:0.01").size() == 99);
    CHECK(io::parse_range("1:1:1").size() == 1);
    CHECK_THROWS_AS(io::parse_range("1:2"), UsageError);
    CHECK_THROWS_AS(io::parse_range("2:1:0.5"), UsageError);
}

TEST_CASE("CSV outputs are byte-identical across thread counts and reruns") {
    TempDir d1, d2, d3;
    const auto args = [&](const TempDir& d, const char* threads) {
        return std::vector<std::string>{
            "mc-survival", "--group", "z:1",      "--kernel",  "nn:1", "--delta_grid",
            "0.3:0.9:0.3", "--horizon", "30",     "--replicas", "300", "--seed", "99",
            "--threads",   threads,   "--out",    d.file("")};
    };
    std::string out;
    REQUIRE(run_quiet(args(d1, "1"), &out) == 0);
    REQUIRE(run_quiet(args(d2, "2"), &out) == 0);
    REQUIRE(run_quiet(args(d3, "1"), &out) == 0);
    const std::string csv1 = read_file(d1.file("survival.csv"));
    CHECK(csv1 == read_file(d2.file("survival.csv")));
    CHECK(csv1 == read_file(d3.file("survival.csv")));
    CHECK(csv1.rfind("delta,theta_hat,ci_lo,ci_hi,n,t_horizon\n", 0) == 0);
    // LF endings only.
    CHECK(csv1.find('\r') == std::string::npos);
}

TEST_CASE("asymmetric duality run through the CLI") {
    TempDir dir;
    std::string out;
    const int code = run_quiet({"exact-duality", "--group", "torus:4x1", "--kernel",
                                "[[[1],2],[[-1],1]]", "--delta", "0.7", "--cases", "25",
                                "--seed", "5", "--out", dir.file("")},
                               &out);
    CHECK(code == 0);
    const auto summary = nlohmann::json::parse(out);
    CHECK(summary["pass"] == true);
    CHECK(summary["max_diff"].get<double>() <= 1e-9);
    const std::string csv = read_file(dir.file("duality.csv"));
    CHECK(csv.rfind("A,B,t,lhs,rhs,diff\n", 0) == 0);
    CHECK(fs::exists(dir.file("duality.csv.manifest.json")));
    const auto manifest = nlohmann::json::parse(read_file(dir.file("duality.csv.manifest.json")));
    CHECK(manifest["command"] == "exact-duality");
    CHECK(manifest["config"]["cases"] == 25);
    CHECK(manifest["seed"] == 5);
}

TEST_CASE("eigenmeasure subcommand reports the full suite") {
    TempDir dir;
    std::string out;
    const int code = run_quiet({"eigenmeasure", "--group", "torus:4x1", "--kernel", "nn:1",
                                "--delta", "1", "--out", dir.file("")},
                               &out);
    CHECK(code == 0);
    const auto rep = nlohmann::json::parse(out);
    CHECK(rep["residual_nu"].get<double>() <= 1e-9);
    CHECK(rep["residual_h"].get<double>() <= 1e-9);
    CHECK(rep["semigroup_defect"].get<double>() <= 1e-8);
    CHECK(rep["homogeneity_defect"].get<double>() <= 1e-9);
    CHECK(rep["pi_increasing"] == true);
    CHECK(rep["dist_improves"] == true);
    const std::string csv = read_file(dir.file("resolvent_ladder.csv"));
    CHECK(csv.rfind("lambda,pi_lambda,residual,dist_to_nu\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6); // header + 5 ladder points
}

TEST_CASE("submult subcommand passes on torus 4x1") {
    std::string out;
    const int code = run_quiet({"submult", "--group", "torus:4x1", "--kernel", "nn:1", "--delta",
                                "0.8", "--pairs", "20", "--seed", "4"},
                               &out);
    CHECK(code == 0);
    CHECK(nlohmann::json::parse(out)["pass"] == true);
}

TEST_CASE("free-group word kernels parse from config and simulate") {
    std::string out;
    const int code = run_quiet(
        {"mc-survival", "--group", "free:2", "--kernel",
         R"([["a",1],["A",1],["b",1],["B",1]])", "--delta", "0.5", "--horizon", "10",
         "--replicas", "200", "--seed", "6"},
        &out);
    CHECK(code == 0);
    // 4-regular tree at |a|/delta = 8: deep in the supercritical phase.
    CHECK(nlohmann::json::parse(out)[0]["theta_hat"].get<double>() > 0.5);
}

TEST_CASE("drift-report and submartingale-fuzz run clean") {
    std::string out;
    CHECK(run_quiet({"drift-report", "--group", "torus:4x1", "--kernel", "nn:1", "--delta", "1",
                     "--eps", "0.5", "--compensate_r"},
                    &out) == 0);
    auto rep = nlohmann::json::parse(out);
    CHECK(std::fabs(rep["coeff_infection"].get<double>()) <= 1e-12);
    CHECK(rep["min_drift_compensated"].get<double>() >= -1e-8);

    CHECK(run_quiet({"submartingale-fuzz", "--cases", "200", "--seed", "8"}, &out) == 0);
    CHECK(nlohmann::json::parse(out)["pass"] == true);
}
