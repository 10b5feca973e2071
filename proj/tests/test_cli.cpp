#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "sturm/cli.hpp"
#include "sturm/config.hpp"
#include "sturm/errors.hpp"
#include "sturm/expression.hpp"

using namespace sturm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "sturm_cli_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const std::string& body) {
    const auto p = dir / "config.json";
    std::ofstream(p) << body;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Run {
    int status;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "sturm_lab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int status = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {status, out.str(), err.str()};
}

std::size_t count(const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
    return n;
}

const char* kLinear = R"({
  "coeff": {"preset": "linear", "b": 0.5},
  "scan": {"eta_min": -2, "eta_max": 2, "scan_n": 200},
  "verify": {"scales": 2}
})";

}  // namespace

TEST_CASE("expressions") {
    CHECK(Expression("1 + 2 * 3")(0, 0, 0, 0) == 7.0);
    CHECK(Expression("2 ^ 3 ^ 2")(0, 0, 0, 0) == 512.0);
    CHECK(Expression("-2 ^ 2")(0, 0, 0, 0) == -4.0);
    CHECK(Expression("(1 + 2) * 3 - 4 / 2")(0, 0, 0, 0) == 7.0);
    CHECK(Expression("cos(x)")(std::numbers::pi, 0, 0, 0) == -1.0);
    CHECK(Expression("-tanh(u) + p * norm")(0, 1.0, 2.0, 3.0) == doctest::Approx(-std::tanh(1.0) + 6.0));
    CHECK(Expression("1 + 1/(1 + norm^2)")(0, 0, 0, 2.0) == doctest::Approx(1.2));
    CHECK(Expression("1.5e-3 * pi")(0, 0, 0, 0) == doctest::Approx(1.5e-3 * std::numbers::pi));
    CHECK(Expression("norm + 1").uses_norm());
    CHECK_FALSE(Expression("u + x").uses_norm());
    CHECK_THROWS_AS(Expression("1 +"), PreconditionError);
    CHECK_THROWS_AS(Expression("foo(u)"), PreconditionError);
    CHECK_THROWS_AS(Expression("sin u"), PreconditionError);
    CHECK_THROWS_AS(Expression("(u"), PreconditionError);
    CHECK_THROWS_AS(Expression("u u"), PreconditionError);
}

TEST_CASE("strict configuration parsing") {
    using nlohmann::json;
    auto message = [](const json& doc) {
        try {
            parse_config(doc);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message(json::parse(R"({"coeff": {"preset": "linear", "bb": 1}})")).find("coeff.bb") != std::string::npos);
    CHECK(message(json::parse(R"({"colors": 1})")).find("'colors'") != std::string::npos);
    CHECK(message(json::parse(R"({"grid": {"n": "257"}})")).find("grid.n") != std::string::npos);
    CHECK(message(json::parse(R"({"grid": {"n": 3}})")).find("grid.n") != std::string::npos);
    CHECK(message(json::parse(R"({"coeff": {"b": -1}})")).find("coeff.b") != std::string::npos);
    CHECK(message(json::parse(R"({"coeff": {"preset": "cubic"}})")).find("coeff.preset") != std::string::npos);
    CHECK(message(json::parse(R"({"coeff": {"f": "-u^3"}})")).find("coeff.f_bound") != std::string::npos);
    CHECK(message(json::parse(R"({"coeff": {"a": "1 +", "epsilon": 1}})")).find("coeff.a") != std::string::npos);
    CHECK(message(json::parse(R"({"coeff": {"a": "0.5", "epsilon": 1}})")).find("parabolicity") != std::string::npos);
    CHECK(message(json::parse(R"({"integrate": {"dt_min": 1, "dt_init": 0.1}})")).find("integrate") != std::string::npos);
    CHECK(message(json::parse(R"({"seeds": [1, -2]})")).find("seeds[1]") != std::string::npos);
    CHECK(message(json::parse(R"({"scan": {"eta_min": 3, "eta_max": 1}})")).find("scan.eta_max") != std::string::npos);
    CHECK(message(json::parse(R"({"sweep": {"b": []}})")).find("sweep.b") != std::string::npos);

    auto cfg = parse_config(json::parse(
        R"j({"coeff": {"a": "1 + 1/(1+norm^2)", "f": "-tanh(u)", "b": 5, "epsilon": 1, "f_bound": 1}})j"));
    CHECK(cfg.coeff.norm_dependent);
    CHECK(cfg.coeff.b == 5.0);
    CHECK(cfg.coeff.a(0, 0, 0, 0) == 2.0);
    CHECK(cfg.coeff.f(0, 1.0, 0, 0) == doctest::Approx(-std::tanh(1.0)));

    auto cut = parse_config(json::parse(R"({"coeff": {"preset": "tanh-reaction", "b": 5, "c": 2, "cutoff_R": 8}})"));
    CHECK(cut.coeff.dissipative);
    CHECK(cut.coeff.f(0, 20.0, 0, 0) == doctest::Approx(-6.0 * 20.0));
}

TEST_CASE("uniform draws") {
    CHECK(unit_uniform(0) == 0.0);
    CHECK(unit_uniform(~0ULL) < 1.0);
    CHECK(unit_uniform(1ULL << 63) == 0.5);
    ScenarioConfig cfg;
    const auto a = initial_field(cfg, 11), b = initial_field(cfg, 11), c = initial_field(cfg, 12);
    CHECK(sup_norm(a - b) == 0.0);
    CHECK(sup_norm(a - c) > 0.0);
}

TEST_CASE("graph on the minimal scenario") {
    const auto dir = scratch("graph");
    const auto cfg = write_config(dir, kLinear);
    auto r = run({"graph", "--config", cfg.string(), "--out", (dir / "out").string()});
    CHECK(r.status == 0);
    const auto dot = slurp(dir / "out" / "graph.dot");
    CHECK(count(dot, "label=\"e") == 1);
    CHECK(count(dot, "label=\"+Phi") + count(dot, "label=\"-Phi") == 2);
    CHECK(count(dot, " -> ") == 2);
    const auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
    CHECK(report["edges"].size() == 2);
    CHECK(report["discrepancies"].empty());
}

TEST_CASE("config errors exit with status 2") {
    const auto dir = scratch("bad");
    auto r = run({"graph", "--config", write_config(dir, R"({"coeff": {"preset": "linear", "bogus": 1}})").string(),
                  "--out", (dir / "out").string()});
    CHECK(r.status == 2);
    CHECK(r.err.find("coeff.bogus") != std::string::npos);

    r = run({"graph", "--config", (dir / "missing.json").string()});
    CHECK(r.status == 2);
    r = run({"graph", "--config", write_config(dir, "{ not json").string()});
    CHECK(r.status == 2);
    r = run({"explode", "--config", "x.json"});
    CHECK(r.status == 2);
    r = run({"graph"});
    CHECK(r.status == 2);
    r = run({"--help"});
    CHECK(r.status == 0);
}

TEST_CASE("fidelity errors exit with status 3") {
    const auto dir = scratch("fidelity");
    const auto cfg = write_config(dir, R"({
      "coeff": {"preset": "linear", "b": 0.5},
      "integrate": {"dt_min": 0.01, "dt_init": 0.01, "dt_max": 0.1, "rtol": 1e-14, "atol": 1e-14, "t_max": 1},
      "initial": {"modes": [1, 1, 1, 1]}
    })");
    auto r = run({"simulate", "--config", cfg.string(), "--out", (dir / "out").string()});
    CHECK(r.status == 3);
    CHECK(r.err.find("underflow") != std::string::npos);
}

TEST_CASE("infinity listing") {
    const auto dir = scratch("infinity");
    const auto cfg = write_config(dir, R"({"coeff": {"preset": "linear", "b": 5, "a_inf": 1}, "sphere": {"t_max": 5}})");
    auto r = run({"infinity", "--config", cfg.string(), "--out", (dir / "out").string(), "--emit-plots-data"});
    CHECK(r.status == 0);
    const auto list = nlohmann::json::parse(slurp(dir / "out" / "infinity.json"));
    REQUIRE(list.size() == 6);
    CHECK(list[4]["j"] == 2);
    CHECK(list[5]["sign"] == -1);
    CHECK(fs::exists(dir / "out" / "energy.dat"));
    CHECK(slurp(dir / "out" / "energy.csv").rfind("t,E_inf\n", 0) == 0);
}

TEST_CASE("outputs are deterministic") {
    const auto dir = scratch("determinism");
    const auto cfg = write_config(dir, R"({
      "coeff": {"preset": "tanh-reaction", "b": 5, "c": 2, "cutoff_R": 8},
      "scan": {"eta_min": -14, "eta_max": 14, "scan_n": 800},
      "integrate": {"t_max": 2},
      "seeds": [5],
      "verify": {"enabled": false},
      "sweep": {"b": [0.5, 5]}
    })");
    for (const std::string cmd : {"simulate", "equilibria", "graph", "ymap", "sweep"}) {
        CAPTURE(cmd);
        const auto a = dir / (cmd + "_a"), b = dir / (cmd + "_b");
        REQUIRE(run({cmd, "--config", cfg.string(), "--out", a.string(), "--jobs", "2"}).status == 0);
        REQUIRE(run({cmd, "--config", cfg.string(), "--out", b.string()}).status == 0);
        int files = 0;
        for (const auto& entry : fs::directory_iterator(a)) {
            ++files;
            CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
        }
        CHECK(files > 0);
    }
    const auto traj = slurp(dir / "simulate_a" / "trajectory.csv");
    CHECK(traj.rfind("t,norm,z,u_0,", 0) == 0);
    const auto table = slurp(dir / "equilibria_a" / "equilibria.csv");
    CHECK(table.rfind("id,eta,u_pi,morse,hyperbolic,lambda_0,", 0) == 0);
    CHECK(table.find("lambda_15\n") != std::string::npos);
    const auto perm = nlohmann::json::parse(slurp(dir / "equilibria_a" / "permutation.json"));
    CHECK(perm.size() == 7);

    const auto seeded = dir / "seeded";
    REQUIRE(run({"simulate", "--config", cfg.string(), "--out", seeded.string(), "--seed", "6"}).status == 0);
    CHECK(slurp(seeded / "trajectory.csv") != traj);
}
