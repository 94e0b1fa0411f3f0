// anisoperc: command-line front end for sweeps, threshold estimation, exponent
// fits, bound tables, the exact oracle and renormalisation certificates.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "anisoperc/errors.hpp"
#include "anisoperc/runner.hpp"

namespace {

using nlohmann::json;

struct Flags {
    std::string config;
    std::optional<int> d, s, side_d, side_s;
    std::optional<std::string> boundary;
    std::optional<std::string> ladder;
    std::optional<double> stretch_k, stretch_exponent;
    std::vector<double> p, q, epsilon, alpha;
    std::optional<int> replicates;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir, run_name;
    std::optional<int> workers;
    std::optional<int> bootstrap, grid_points;
    std::optional<double> q_min, q_max;
    std::optional<std::string> axes, method;
    std::optional<int> chi_side, chi_replicates;
    std::vector<std::string> constants;
    std::optional<std::string> golden;
    bool write_golden = false;
};

void add_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("-c,--config", f.config, "JSON run configuration (comments allowed); flags override it")
        ->check(CLI::ExistingFile);
    cmd->add_option("--d", f.d, "dimension of the p-sublattice");
    cmd->add_option("--s", f.s, "dimension of the q-sublattice");
    cmd->add_option("--side-d", f.side_d, "box side along D directions");
    cmd->add_option("--side-s", f.side_s, "box side along S directions");
    cmd->add_option("--boundary", f.boundary, "periodic or free");
    cmd->add_option("--ladder", f.ladder, "sizes as side_dxside_s, comma separated (e.g. 64x64,128x128)");
    cmd->add_option("--stretch-k", f.stretch_k, "set side_d = k * side_s / (p_c(d) - p)^e for every size");
    cmd->add_option("--stretch-exponent", f.stretch_exponent, "exponent e of the stretch (default 1)");
    cmd->add_option("--p", f.p, "p value(s), comma separated")->delimiter(',');
    cmd->add_option("--q", f.q, "q value(s), comma separated")->delimiter(',');
    cmd->add_option("--replicates", f.replicates, "independent samples per lattice");
    cmd->add_option("--seed", f.seed, std::string("master seed (default: $") + anisoperc::kSeedEnvVar + ")");
    cmd->add_option("--output-dir", f.output_dir, "root of the output tree");
    cmd->add_option("--run-name", f.run_name, "run directory prefix (default: UTC timestamp)");
    cmd->add_option("--workers", f.workers, "worker threads (0 = logical cores)");
    cmd->add_option("--bootstrap", f.bootstrap, "bootstrap resamples for crossing CIs");
    cmd->add_option("--grid-points", f.grid_points, "q grid points for crossing analysis");
    cmd->add_option("--q-min", f.q_min, "lower end of the q search bracket");
    cmd->add_option("--q-max", f.q_max, "upper end of the q search bracket (truncates sweeps)");
    cmd->add_option("--axes", f.axes, "crossing directions: any, d or s");
    cmd->add_option("--method", f.method, "wrap_crossing or binary_search_R");
    cmd->add_option("--epsilon", f.epsilon, "renormalisation epsilon value(s)")->delimiter(',');
    cmd->add_option("--alpha", f.alpha, "renormalisation alpha value(s)")->delimiter(',');
    cmd->add_option("--chi-side", f.chi_side, "box side for simulated chi_d (d >= 2)");
    cmd->add_option("--chi-replicates", f.chi_replicates, "replicates for simulated chi_d");
    cmd->add_option("--constant", f.constants, "override a reference constant, NAME=VALUE");
    cmd->add_option("--golden", f.golden, "golden oracle file");
    cmd->add_flag("--write-golden", f.write_golden, "regenerate the golden oracle file");
}

json read_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::exception& e) {
        throw anisoperc::ConfigError("config: " + path + ": " + e.what());
    }
}

json merged_config(const std::string& experiment, const Flags& f) {
    json j = read_config(f.config);
    if (!j.is_object()) throw anisoperc::ConfigError("config: <root>: expected object");
    j["experiment"] = experiment;
    auto lat = [&](const char* key, const auto& v) {
        if (v) j["lattice"][key] = *v;
    };
    lat("d", f.d);
    lat("s", f.s);
    lat("side_d", f.side_d);
    lat("side_s", f.side_s);
    lat("boundary", f.boundary);
    if (f.ladder) {
        json l = json::array();
        std::stringstream ss(*f.ladder);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto x = item.find('x');
            try {
                if (x == std::string::npos) throw std::invalid_argument(item);
                l.push_back({std::stoi(item.substr(0, x)), std::stoi(item.substr(x + 1))});
            } catch (const std::exception&) {
                throw anisoperc::ConfigError("--ladder: expected side_dxside_s, got '" + item + "'");
            }
        }
        j["ladder"] = l;
    }
    if (f.stretch_k) j["stretch_k"] = *f.stretch_k;
    if (f.stretch_exponent) j["stretch_exponent"] = *f.stretch_exponent;
    if (!f.p.empty()) {
        j.erase("p");
        j["p_grid"] = f.p;
    }
    if (!f.q.empty()) {
        j.erase("q");
        j["q_grid"] = f.q;
    }
    if (f.replicates) j["replicates"] = *f.replicates;
    if (f.seed) j["master_seed"] = *f.seed;
    if (f.output_dir) j["output_dir"] = *f.output_dir;
    if (f.run_name) j["run_name"] = *f.run_name;
    if (f.workers) j["workers"] = *f.workers;
    auto est = [&](const char* key, const auto& v) {
        if (v) j["estimator"][key] = *v;
    };
    est("bootstrap", f.bootstrap);
    est("grid_points", f.grid_points);
    est("q_min", f.q_min);
    est("q_max", f.q_max);
    est("axes", f.axes);
    est("method", f.method);
    if (!f.epsilon.empty()) j["epsilon_grid"] = f.epsilon;
    if (!f.alpha.empty()) j["alpha_grid"] = f.alpha;
    if (f.chi_side) j["chi_side"] = *f.chi_side;
    if (f.chi_replicates) j["chi_replicates"] = *f.chi_replicates;
    for (const auto& kv : f.constants) {
        const auto eq = kv.find('=');
        try {
            if (eq == std::string::npos) throw std::invalid_argument(kv);
            j["constants_overrides"][kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        } catch (const std::exception&) {
            throw anisoperc::ConfigError("--constant: expected NAME=VALUE, got '" + kv + "'");
        }
    }
    if (f.golden) j["golden_path"] = *f.golden;
    if (f.write_golden) j["write_golden"] = true;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Anisotropic bond percolation lab on Z^d x Z^s"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "anisoperc " + anisoperc::source_revision());
    Flags flags;
    for (const auto& name : anisoperc::experiment_names()) {
        static const std::map<std::string, std::string> help{
            {"sweep", "Newman-Ziff sweeps over q at each p; canonical R_L, chi, largest cluster"},
            {"estimate-qc", "critical q_c(p) from wrap-probability crossings on a size ladder"},
            {"fit-psi", "q_c(p) on a p grid, log-log fit of the crossover exponent and chi_d"},
            {"bounds-table", "closed-form bounds per p: lower bound, series bound, Kesten line, certificate"},
            {"oracle-check", "exact enumeration on tiny graphs against the golden suite"},
            {"certify", "renormalisation certificate over (p, q, epsilon, alpha)"}};
        add_flags(app.add_subcommand(name, help.at(name)), flags);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return e.get_exit_code() == 0 ? 0 : (code == 0 ? 0 : static_cast<int>(anisoperc::ErrorKind::config));
    }
    const std::string experiment = app.get_subcommands().front()->get_name();
    try {
        const anisoperc::RunConfig config = anisoperc::RunConfig::from_json(merged_config(experiment, flags));
        const anisoperc::RunOutcome outcome = anisoperc::run_experiment(config);
        std::cout << outcome.run_dir.string() << "\n";
        if (outcome.exit_code != 0) std::cerr << "anisoperc: " << outcome.message << "\n";
        return outcome.exit_code;
    } catch (const anisoperc::Error& e) {
        std::cerr << "anisoperc: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "anisoperc: " << e.what() << "\n";
        return 1;
    }
}
