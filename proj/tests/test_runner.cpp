#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "anisoperc/errors.hpp"
#include "anisoperc/runner.hpp"

using namespace anisoperc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string error_of(const json& j) {
    try {
        RunConfig::from_json(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("anisoperc_test_runner_" + name);
    fs::remove_all(dir);
    return dir;
}

double num(const std::string& s) { return std::stod(s); }

}  // namespace

TEST_CASE("csv escaping follows RFC 4180 quoting") {
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_escape("two\nlines") == "\"two\nlines\"");
    CHECK(csv_escape("") == "");
}

TEST_CASE("csv tables open the header and every row with the schema string") {
    CsvTable t{"demo.v1", {"x", "y"}, {{"1", "a,b"}, {"2", "c"}}};
    CHECK(to_csv(t) == "demo.v1,x,y\r\ndemo.v1,1,\"a,b\"\r\ndemo.v1,2,c\r\n");
}

TEST_CASE("format_double round-trips") {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, 0.0, -2.5, 123456789.0})
        CHECK(std::stod(format_double(x)) == x);
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("config parsing is strict and names the offending field") {
    CHECK(error_of({{"lattice", {{"sidee", 4}}}}) == "config: lattice.sidee: unknown field");
    CHECK(error_of({{"bogus", 1}}) == "config: bogus: unknown field");
    CHECK(error_of({{"estimator", {{"bootstrapp", 1}}}}) == "config: estimator.bootstrapp: unknown field");
    CHECK(error_of({{"replicates", "many"}}).rfind("config: replicates: expected integer", 0) == 0);
    CHECK(error_of({{"p_grid", {0.1, "x"}}}).rfind("config: p_grid[1]: expected number", 0) == 0);
    CHECK(error_of({{"p", 0.2}, {"p_grid", {0.3}}}) == "config: p: give either p or p_grid");
    CHECK(error_of({{"experiment", "nope"}}).find("unknown experiment") != std::string::npos);
    CHECK(error_of({{"lattice", {{"boundary", "mobius"}}}}) == "config: lattice.boundary: expected free or periodic");
    CHECK(error_of({{"p_grid", {1.5}}}) == "config: p_grid[0]: must lie in [0, 1]");
    CHECK(error_of({{"ladder", {{8, 8}, {8, 8}}}}) == "config: ladder[1]: sizes must grow along the ladder");
    CHECK(error_of({{"experiment", "certify"}, {"q", 0.1}}) == "config: lattice.s: certify needs s >= 2");
    CHECK(error_of({{"experiment", "fit-psi"}, {"p_grid", {0.2, 0.3}}}) == "config: p_grid: fit-psi needs >= 3 points");
    CHECK(error_of({{"estimator", {{"q_min", 0.5}, {"q_max", 0.4}}}}) ==
          "config: estimator: need 0 <= q_min < q_max <= 1");
}

TEST_CASE("config json round-trips and scalar p is accepted") {
    const json in = {{"experiment", "estimate-qc"},
                     {"lattice", {{"d", 1}, {"s", 2}, {"side_d", 12}, {"side_s", 8}, {"boundary", "free"}}},
                     {"ladder", {{12, 8}, {24, 16}}},
                     {"p", 0.4},
                     {"replicates", 7},
                     {"master_seed", 99},
                     {"constants_overrides", {{"chi_1_scale", 1.0}}},
                     {"estimator", {{"bootstrap", 3}, {"axes", "s"}, {"method", "binary_search_R"}}}};
    const RunConfig c = RunConfig::from_json(in);
    CHECK(c.p_grid == std::vector<double>{0.4});
    CHECK(c.lattice.boundary == Boundary::free);
    CHECK(c.estimator.axes == CrossingAxes::s_only);
    CHECK(c.estimator.method == QcMethod::binary_search_R);
    CHECK(*c.master_seed == 99);
    const RunConfig back = RunConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
}

TEST_CASE("seed resolution: config, then environment, then default") {
    ::unsetenv(kSeedEnvVar);
    CHECK(resolve_seed(std::nullopt).seed == kFallbackSeed);
    CHECK(resolve_seed(std::nullopt).source == "default");
    ::setenv(kSeedEnvVar, "4242", 1);
    CHECK(resolve_seed(std::nullopt).seed == 4242);
    CHECK(resolve_seed(std::nullopt).source == "env");
    CHECK(resolve_seed(std::uint64_t{5}).seed == 5);
    CHECK(resolve_seed(std::uint64_t{5}).source == "config");
    ::setenv(kSeedEnvVar, "12x", 1);
    CHECK_THROWS_AS(resolve_seed(std::nullopt), ConfigError);
    ::unsetenv(kSeedEnvVar);
}

TEST_CASE("sweep endpoints and the Kesten crossing") {
    RunConfig c = RunConfig::from_json({{"experiment", "sweep"},
                                        {"lattice", {{"side_d", 32}, {"side_s", 32}}},
                                        {"p", 0.5},
                                        {"q_grid", {0.0, 0.4, 0.6, 1.0}},
                                        {"replicates", 40}});
    const Outputs o = execute(c, 17);
    REQUIRE(o.table.rows.size() == 4);
    const auto& h = o.table.header;
    const auto col = [&](const std::string& name) {
        return static_cast<std::size_t>(std::find(h.begin(), h.end(), name) - h.begin());
    };
    CHECK(num(o.table.rows[0][col("R_L")]) == 0.0);
    CHECK(num(o.table.rows[0][col("chi_est")]) == doctest::Approx(3.0).epsilon(0.1));
    CHECK(num(o.table.rows[3][col("R_L")]) == 1.0);
    CHECK(num(o.table.rows[3][col("largest_frac")]) == 1.0);
    CHECK(num(o.table.rows[1][col("R_L")]) < 0.5);
    CHECK(num(o.table.rows[2][col("R_L")]) > 0.5);
    CHECK(o.exit_code == 0);
}

TEST_CASE("execute is deterministic for a fixed seed") {
    const RunConfig c = RunConfig::from_json({{"experiment", "estimate-qc"},
                                              {"lattice", {{"side_d", 12}, {"side_s", 12}}},
                                              {"p", 0.5},
                                              {"replicates", 30},
                                              {"estimator", {{"bootstrap", 10}}}});
    const Outputs a = execute(c, 3);
    const Outputs b = execute(c, 3);
    CHECK(to_csv(a.table) == to_csv(b.table));
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].dump() == b.records[i].dump());
    const Outputs other = execute(c, 4);
    CHECK(to_csv(other.table) != to_csv(a.table));
}

TEST_CASE("bounds table: lower bound decreases in p and matches the Kesten line at s = 1") {
    const RunConfig c = RunConfig::from_json(
        {{"experiment", "bounds-table"}, {"p_grid", {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}}});
    const Outputs o = execute(c, 1);
    REQUIRE(o.records.size() == 8);
    double prev = 1.0;
    for (const auto& r : o.records) {
        const double p = r["p"];
        const double lb = r["qc_lower_bound"];
        CHECK(lb < prev);
        CHECK(lb == doctest::Approx((1.0 - p) / (2.0 * (1.0 + p))));
        CHECK(lb <= r["kesten_line"].get<double>());
        prev = lb;
    }
}

TEST_CASE("certify reproduces the worked example and flags invalid regimes") {
    const RunConfig ok = RunConfig::from_json({{"experiment", "certify"},
                                               {"lattice", {{"s", 2}}},
                                               {"p", 0.999},
                                               {"q", 0.05},
                                               {"epsilon_grid", {0.1}},
                                               {"alpha_grid", {50}}});
    const Outputs o = execute(ok, 1);
    REQUIRE(o.records.size() == 1);
    CHECK(o.records[0]["certified"] == true);
    CHECK(o.records[0]["margin"].get<double>() == doctest::Approx(0.098).epsilon(0.01));
    CHECK(o.exit_code == 0);

    RunConfig bad = ok;
    bad.p_grid = {0.05};
    bad.epsilon_grid = {0.01};
    const Outputs ob = execute(bad, 1);
    CHECK(ob.records[0]["status"] == "invalid_regime");
    CHECK(ob.exit_code == static_cast<int>(ErrorKind::invalid_regime));
}

TEST_CASE("run_experiment layout, manifest and staging") {
    const fs::path root = scratch("layout");
    RunConfig c = RunConfig::from_json({{"experiment", "certify"},
                                        {"lattice", {{"s", 2}}},
                                        {"p", 0.999},
                                        {"q", 0.05},
                                        {"master_seed", 8},
                                        {"run_name", "t"}});
    c.output_dir = root.string();
    const RunOutcome out = run_experiment(c);
    CHECK(out.run_dir == root / "certify" / "t-seed8");
    for (const char* f : {"manifest.json", "records.jsonl", "table.csv", "timing.json"})
        CHECK(fs::exists(out.run_dir / f));
    const json m = json::parse(slurp(out.run_dir / "manifest.json"));
    CHECK(m["status"] == "ok");
    CHECK(m["master_seed"] == 8);
    CHECK(m["seed_source"] == "config");
    CHECK(m["csv_schema"] == "anisoperc.certify.v1");
    CHECK(RunConfig::from_json(m["config"]).to_json() == m["config"]);
    CHECK(slurp(out.run_dir / "table.csv").rfind("anisoperc.certify.v1,", 0) == 0);
    CHECK_THROWS_AS(run_experiment(c), ConfigError);

    // A run that fails keeps its flagged staging directory and no final directory.
    RunConfig failing = c;
    failing.run_name = "f";
    failing.lattice.s = 7;
    failing.lattice.side_s = 2;
    failing.lattice.side_d = 2;
    CHECK_THROWS_AS(run_experiment(failing), ConfigError);
    CHECK_FALSE(fs::exists(root / "certify" / "f-seed8"));
    const json fm = json::parse(slurp(root / "certify" / "f-seed8.partial" / "manifest.json"));
    CHECK(fm["status"] == "failed");
    CHECK(fm["exit_code"] == static_cast<int>(ErrorKind::config));
    fs::remove_all(root);
}

TEST_CASE("oracle-check detects a tampered golden file") {
    const fs::path root = scratch("golden");
    fs::create_directories(root);
    const fs::path good = fs::path(ANISOPERC_TEST_DATA_DIR) / "golden_oracle.jsonl";
    std::string text = slurp(good);
    const auto pos = text.find("\"chi_origin\":");
    REQUIRE(pos != std::string::npos);
    text.insert(pos + 13, "1");
    {
        std::ofstream(root / "tampered.jsonl", std::ios::binary) << text;
    }
    RunConfig c = RunConfig::from_json({{"experiment", "oracle-check"}});
    c.golden_path = (root / "tampered.jsonl").string();
    const Outputs o = execute(c, 1);
    CHECK(o.exit_code == 1);
    int flagged = 0;
    for (const auto& r : o.records)
        if (r.contains("golden_diffs") && !r["golden_diffs"].empty()) ++flagged;
    CHECK(flagged == 1);
    fs::remove_all(root);
}
