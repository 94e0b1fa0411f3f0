#include "anisoperc/runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "anisoperc/bounds.hpp"
#include "anisoperc/errors.hpp"
#include "anisoperc/kernels.hpp"
#include "anisoperc/oracle.hpp"
#include "anisoperc/parallel.hpp"
#include "anisoperc/rng.hpp"

namespace anisoperc {

using nlohmann::json;

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"sweep",        "estimate-qc", "fit-psi",
                                                "bounds-table", "oracle-check", "certify"};
    return names;
}

std::string source_revision() { return ANISOPERC_REVISION; }

namespace {

template <typename T>
T get_field(const json& j, const std::string& path) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: " + path + ": expected " + (std::is_same_v<T, std::string> ? "string" : std::is_same_v<T, bool> ? "boolean" : std::is_integral_v<T> ? "integer" : "number") +
                          ", got " + j.dump());
    }
}

template <typename T>
std::vector<T> get_list(const json& j, const std::string& path) {
    if (!j.is_array()) return {get_field<T>(j, path)};
    std::vector<T> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_field<T>(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw ConfigError("config: " + (where.empty() ? std::string("<root>") : where) + ": expected object");
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw ConfigError("config: " + where + (where.empty() ? "" : ".") + key + ": unknown field");
}

CrossingAxes axes_from_string(const std::string& s) {
    if (s == "any") return CrossingAxes::any;
    if (s == "d") return CrossingAxes::d_only;
    if (s == "s") return CrossingAxes::s_only;
    throw ConfigError("config: estimator.axes: expected any, d or s");
}

std::string to_string(CrossingAxes a) {
    switch (a) {
        case CrossingAxes::any: return "any";
        case CrossingAxes::d_only: return "d";
        case CrossingAxes::s_only: return "s";
    }
    return "any";
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
    reject_unknown(j,
                   {"experiment", "lattice", "ladder", "stretch_k", "stretch_exponent", "p", "p_grid", "q", "q_grid", "replicates",
                    "master_seed", "output_dir", "run_name", "workers", "constants_overrides", "estimator",
                    "epsilon_grid", "alpha_grid", "chi_side", "chi_replicates", "golden_path", "write_golden"},
                   "");
    RunConfig c;
    if (j.contains("experiment")) c.experiment = get_field<std::string>(j["experiment"], "experiment");
    if (j.contains("lattice")) {
        const json& l = j["lattice"];
        reject_unknown(l, {"d", "s", "side_d", "side_s", "boundary"}, "lattice");
        if (l.contains("d")) c.lattice.d = get_field<int>(l["d"], "lattice.d");
        if (l.contains("s")) c.lattice.s = get_field<int>(l["s"], "lattice.s");
        if (l.contains("side_d")) c.lattice.side_d = get_field<int>(l["side_d"], "lattice.side_d");
        if (l.contains("side_s")) c.lattice.side_s = get_field<int>(l["side_s"], "lattice.side_s");
        if (l.contains("boundary")) {
            try {
                c.lattice.boundary = boundary_from_string(get_field<std::string>(l["boundary"], "lattice.boundary"));
            } catch (const ConfigError&) {
                throw ConfigError("config: lattice.boundary: expected free or periodic");
            }
        }
    }
    if (j.contains("ladder")) {
        const json& l = j["ladder"];
        if (!l.is_array()) throw ConfigError("config: ladder: expected list of [side_d, side_s]");
        for (std::size_t i = 0; i < l.size(); ++i) {
            const std::string path = "ladder[" + std::to_string(i) + "]";
            if (!l[i].is_array() || l[i].size() != 2) throw ConfigError("config: " + path + ": expected [side_d, side_s]");
            c.ladder.emplace_back(get_field<int>(l[i][0], path + "[0]"), get_field<int>(l[i][1], path + "[1]"));
        }
    }
    if (j.contains("stretch_k") && !j["stretch_k"].is_null()) c.stretch_k = get_field<double>(j["stretch_k"], "stretch_k");
    if (j.contains("stretch_exponent"))
        c.stretch_exponent = get_field<double>(j["stretch_exponent"], "stretch_exponent");
    if (j.contains("p") && j.contains("p_grid")) throw ConfigError("config: p: give either p or p_grid");
    if (j.contains("p")) c.p_grid = get_list<double>(j["p"], "p");
    if (j.contains("p_grid")) c.p_grid = get_list<double>(j["p_grid"], "p_grid");
    if (j.contains("q") && j.contains("q_grid")) throw ConfigError("config: q: give either q or q_grid");
    if (j.contains("q")) c.q_grid = get_list<double>(j["q"], "q");
    if (j.contains("q_grid")) c.q_grid = get_list<double>(j["q_grid"], "q_grid");
    if (j.contains("replicates")) c.replicates = get_field<int>(j["replicates"], "replicates");
    if (j.contains("master_seed") && !j["master_seed"].is_null())
        c.master_seed = get_field<std::uint64_t>(j["master_seed"], "master_seed");
    if (j.contains("output_dir")) c.output_dir = get_field<std::string>(j["output_dir"], "output_dir");
    if (j.contains("run_name")) c.run_name = get_field<std::string>(j["run_name"], "run_name");
    if (j.contains("workers")) c.workers = get_field<int>(j["workers"], "workers");
    if (j.contains("constants_overrides")) {
        const json& o = j["constants_overrides"];
        if (!o.is_object()) throw ConfigError("config: constants_overrides: expected object");
        for (const auto& [k, v] : o.items())
            c.constants_overrides[k] = get_field<double>(v, "constants_overrides." + k);
    }
    if (j.contains("estimator")) {
        const json& e = j["estimator"];
        reject_unknown(e, {"grid_points", "bootstrap", "q_min", "q_max", "axes", "method"}, "estimator");
        if (e.contains("grid_points")) c.estimator.grid_points = get_field<int>(e["grid_points"], "estimator.grid_points");
        if (e.contains("bootstrap")) c.estimator.bootstrap = get_field<int>(e["bootstrap"], "estimator.bootstrap");
        if (e.contains("q_min")) c.estimator.q_min = get_field<double>(e["q_min"], "estimator.q_min");
        if (e.contains("q_max")) c.estimator.q_max = get_field<double>(e["q_max"], "estimator.q_max");
        if (e.contains("axes")) c.estimator.axes = axes_from_string(get_field<std::string>(e["axes"], "estimator.axes"));
        if (e.contains("method")) {
            try {
                c.estimator.method = qc_method_from_string(get_field<std::string>(e["method"], "estimator.method"));
            } catch (const ConfigError&) {
                throw ConfigError("config: estimator.method: expected wrap_crossing or binary_search_R");
            }
        }
    }
    if (j.contains("epsilon_grid")) c.epsilon_grid = get_list<double>(j["epsilon_grid"], "epsilon_grid");
    if (j.contains("alpha_grid")) c.alpha_grid = get_list<double>(j["alpha_grid"], "alpha_grid");
    if (j.contains("chi_side")) c.chi_side = get_field<int>(j["chi_side"], "chi_side");
    if (j.contains("chi_replicates")) c.chi_replicates = get_field<int>(j["chi_replicates"], "chi_replicates");
    if (j.contains("golden_path")) c.golden_path = get_field<std::string>(j["golden_path"], "golden_path");
    if (j.contains("write_golden")) c.write_golden = get_field<bool>(j["write_golden"], "write_golden");
    c.validate();
    return c;
}

json RunConfig::to_json() const {
    json j;
    j["experiment"] = experiment;
    j["lattice"] = {{"d", lattice.d},
                    {"s", lattice.s},
                    {"side_d", lattice.side_d},
                    {"side_s", lattice.side_s},
                    {"boundary", anisoperc::to_string(lattice.boundary)}};
    json l = json::array();
    for (const auto& [a, b] : ladder) l.push_back({a, b});
    j["ladder"] = l;
    j["stretch_k"] = stretch_k ? json(*stretch_k) : json(nullptr);
    j["stretch_exponent"] = stretch_exponent;
    j["p_grid"] = p_grid;
    j["q_grid"] = q_grid;
    j["replicates"] = replicates;
    j["master_seed"] = master_seed ? json(*master_seed) : json(nullptr);
    j["output_dir"] = output_dir;
    j["run_name"] = run_name;
    j["workers"] = workers;
    j["constants_overrides"] = constants_overrides;
    j["estimator"] = {{"grid_points", estimator.grid_points}, {"bootstrap", estimator.bootstrap},
                      {"q_min", estimator.q_min},             {"q_max", estimator.q_max},
                      {"axes", to_string(estimator.axes)},    {"method", anisoperc::to_string(estimator.method)}};
    j["epsilon_grid"] = epsilon_grid;
    j["alpha_grid"] = alpha_grid;
    j["chi_side"] = chi_side;
    j["chi_replicates"] = chi_replicates;
    j["golden_path"] = golden_path;
    j["write_golden"] = write_golden;
    return j;
}

void RunConfig::validate() const {
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), experiment) == names.end())
        throw ConfigError("config: experiment: unknown experiment '" + experiment + "'");
    try {
        lattice.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("config: lattice: ") + e.what());
    }
    for (std::size_t i = 0; i < ladder.size(); ++i)
        if (ladder[i].first < 2 || ladder[i].second < 2)
            throw ConfigError("config: ladder[" + std::to_string(i) + "]: sides must be >= 2");
    for (std::size_t i = 1; i < ladder.size(); ++i)
        if (static_cast<long long>(ladder[i].first) * ladder[i].second <=
            static_cast<long long>(ladder[i - 1].first) * ladder[i - 1].second)
            throw ConfigError("config: ladder[" + std::to_string(i) + "]: sizes must grow along the ladder");
    if (experiment == "certify" && lattice.s < 2) throw ConfigError("config: lattice.s: certify needs s >= 2");
    if (stretch_k && !(*stretch_k > 0.0)) throw ConfigError("config: stretch_k: must be > 0");
    if (!(stretch_exponent > 0.0)) throw ConfigError("config: stretch_exponent: must be > 0");
    if (p_grid.empty()) throw ConfigError("config: p_grid: must not be empty");
    for (std::size_t i = 0; i < p_grid.size(); ++i)
        if (!(p_grid[i] >= 0.0 && p_grid[i] <= 1.0))
            throw ConfigError("config: p_grid[" + std::to_string(i) + "]: must lie in [0, 1]");
    for (std::size_t i = 0; i < q_grid.size(); ++i)
        if (!(q_grid[i] >= 0.0 && q_grid[i] <= 1.0))
            throw ConfigError("config: q_grid[" + std::to_string(i) + "]: must lie in [0, 1]");
    if (experiment == "certify" && q_grid.empty()) throw ConfigError("config: q_grid: certify needs q values");
    if (replicates < 1) throw ConfigError("config: replicates: must be >= 1");
    if ((experiment == "estimate-qc" || experiment == "fit-psi") && replicates < 2)
        throw ConfigError("config: replicates: crossing analysis needs >= 2");
    if (experiment == "fit-psi" && p_grid.size() < 3) throw ConfigError("config: p_grid: fit-psi needs >= 3 points");
    if (workers < 0) throw ConfigError("config: workers: must be >= 0");
    if (estimator.grid_points < 4) throw ConfigError("config: estimator.grid_points: must be >= 4");
    if (estimator.bootstrap < 0) throw ConfigError("config: estimator.bootstrap: must be >= 0");
    if (!(estimator.q_min >= 0.0 && estimator.q_min < estimator.q_max && estimator.q_max <= 1.0))
        throw ConfigError("config: estimator: need 0 <= q_min < q_max <= 1");
    if (epsilon_grid.empty()) throw ConfigError("config: epsilon_grid: must not be empty");
    if (alpha_grid.empty()) throw ConfigError("config: alpha_grid: must not be empty");
    for (std::size_t i = 0; i < epsilon_grid.size(); ++i)
        if (!(epsilon_grid[i] > 0.0)) throw ConfigError("config: epsilon_grid[" + std::to_string(i) + "]: must be > 0");
    for (std::size_t i = 0; i < alpha_grid.size(); ++i)
        if (!(alpha_grid[i] > 0.0)) throw ConfigError("config: alpha_grid[" + std::to_string(i) + "]: must be > 0");
    if (chi_side < 2) throw ConfigError("config: chi_side: must be >= 2");
    if (chi_replicates < 1) throw ConfigError("config: chi_replicates: must be >= 1");
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::exception& e) {
        throw ConfigError("config: " + path + ": " + e.what());
    }
    return RunConfig::from_json(j);
}

SeedResolution resolve_seed(const std::optional<std::uint64_t>& given) {
    if (given) return {*given, "config"};
    if (const char* env = std::getenv(kSeedEnvVar); env && *env) {
        std::uint64_t v = 0;
        const char* end = env + std::char_traits<char>::length(env);
        const auto [ptr, ec] = std::from_chars(env, end, v);
        if (ec != std::errc() || ptr != end)
            throw ConfigError(std::string(kSeedEnvVar) + ": expected an unsigned integer, got '" + env + "'");
        return {v, "env"};
    }
    return {kFallbackSeed, "default"};
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string to_csv(const CsvTable& table) {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        out += csv_escape(table.schema);
        for (const auto& c : cells) out += "," + csv_escape(c);
        out += "\r\n";
    };
    line(table.header);
    for (const auto& r : table.rows) line(r);
    return out;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace {

std::string fmt(double x) { return format_double(x); }
std::string fmt(std::uint64_t x) { return std::to_string(x); }
std::string fmt(int x) { return std::to_string(x); }
std::string fmt(bool b) { return b ? "true" : "false"; }

json spec_json(const LatticeSpec& s) {
    return {{"d", s.d}, {"s", s.s}, {"side_d", s.side_d}, {"side_s", s.side_s}, {"boundary", to_string(s.boundary)}};
}

std::string sizes_text(const std::vector<LatticeSpec>& sizes) {
    std::string out;
    for (const auto& s : sizes) out += (out.empty() ? "" : ";") + std::to_string(s.side_d) + "x" + std::to_string(s.side_s);
    return out;
}

ConstantsTable constants_for(const RunConfig& c) {
    ConstantsTable t = ConstantsTable::defaults();
    for (const auto& [k, v] : c.constants_overrides) t.override_value(k, v);
    return t;
}

std::vector<LatticeSpec> ladder_for(const RunConfig& c, double p, double pc_d) {
    std::vector<std::pair<int, int>> sides = c.ladder;
    if (sides.empty()) sides = {{c.lattice.side_d, c.lattice.side_s}, {2 * c.lattice.side_d, 2 * c.lattice.side_s}};
    std::vector<LatticeSpec> out;
    for (auto [sd, ss] : sides) {
        if (c.stretch_k && p < pc_d)
            sd = std::max(2, static_cast<int>(std::lround(*c.stretch_k * ss / std::pow(pc_d - p, c.stretch_exponent))));
        out.push_back({c.lattice.d, c.lattice.s, sd, ss, c.lattice.boundary});
    }
    return out;
}

QcOptions qc_options(const RunConfig& c, double pc_d) {
    QcOptions o;
    o.method = c.estimator.method;
    o.axes = c.estimator.axes;
    o.grid_points = c.estimator.grid_points;
    o.bootstrap = c.estimator.bootstrap;
    o.q_min = c.estimator.q_min;
    o.q_max = c.estimator.q_max;
    o.pc_d = pc_d;
    o.workers = c.workers;
    return o;
}

// chi_d(p) at q = 0: exact on Z, simulated on a periodic box otherwise.
ChiEstimate chi_d_at(const RunConfig& c, double p, std::uint64_t seed) {
    if (c.lattice.d == 1) return {chi_1_exact(p), 0.0, 0.0, false, 0};
    const LatticeSpec box{c.lattice.d, 1, c.chi_side, 2, Boundary::periodic};
    ChiOptions o;
    o.workers = c.workers;
    return estimate_chi(box, {p, 0.0}, c.chi_replicates, seed, o);
}

json qc_json(const QcEstimate& e, std::uint64_t seed) {
    json sizes = json::array();
    for (const auto& s : e.sizes_used) sizes.push_back({s.side_d, s.side_s});
    return {{"schema", "anisoperc.qc.v1"},
            {"master_seed", seed},
            {"p", e.p},
            {"qc_hat", e.qc_hat},
            {"ci_halfwidth", e.ci_halfwidth},
            {"method", to_string(e.method)},
            {"replicates", e.replicates},
            {"sizes", sizes},
            {"degenerate", e.degenerate},
            {"at_or_above_pc", e.at_or_above_pc},
            {"r_at_crossing", e.r_at_crossing},
            {"bootstrap_used", e.bootstrap_used},
            {"bootstrap_failed", e.bootstrap_failed}};
}

Outputs run_sweep(const RunConfig& c, std::uint64_t seed) {
    Outputs out;
    std::vector<double> qs = c.q_grid;
    if (qs.empty())
        for (int i = 0; i <= 20; ++i) qs.push_back(i / 20.0);
    out.table.schema = "anisoperc.sweep.v1";
    out.table.header = {"master_seed", "d",  "s",      "side_d",  "side_s",       "boundary",
                        "replicates",  "p",  "q",      "R_L",     "R_L_se",       "chi_est",
                        "chi_se",      "largest_frac", "largest_frac_se"};
    SweepOptions so;
    so.workers = c.workers;
    for (double p : c.p_grid) {
        const SweepCurve curve = sweep_q(c.lattice, p, c.replicates, seed, so);
        const std::uint32_t mask = axes_mask(c.lattice, c.estimator.axes);
        json firsts = json::array();
        for (std::size_t r = 0; r < curve.first_crossing.size(); ++r) {
            const Index m = curve.first_crossing_for(r, mask);
            firsts.push_back(m == SweepCurve::kNever ? json(nullptr) : json(m));
        }
        json canon = json::array();
        for (double q : qs) {
            const CanonicalPoint pt = convolve_canonical(curve, q, c.estimator.axes);
            canon.push_back({{"q", q},
                             {"R_L", pt.crossing},
                             {"R_L_se", pt.crossing_se},
                             {"chi_est", pt.mean_cluster_size},
                             {"chi_se", pt.mean_cluster_size_se},
                             {"largest_frac", pt.largest_frac},
                             {"largest_frac_se", pt.largest_frac_se}});
            out.table.rows.push_back({fmt(seed), fmt(c.lattice.d), fmt(c.lattice.s), fmt(c.lattice.side_d),
                                      fmt(c.lattice.side_s), to_string(c.lattice.boundary), fmt(c.replicates), fmt(p),
                                      fmt(q), fmt(pt.crossing), fmt(pt.crossing_se), fmt(pt.mean_cluster_size),
                                      fmt(pt.mean_cluster_size_se), fmt(pt.largest_frac), fmt(pt.largest_frac_se)});
        }
        out.records.push_back({{"schema", "anisoperc.sweep.v1"},
                               {"master_seed", seed},
                               {"p", p},
                               {"lattice", spec_json(c.lattice)},
                               {"replicates", c.replicates},
                               {"replicate_block", {0, c.replicates}},
                               {"vertex_count", curve.vertex_count},
                               {"total_s", curve.total_s},
                               {"m_max", curve.m_max},
                               {"axes", to_string(c.estimator.axes)},
                               {"first_crossing", firsts},
                               {"canonical", canon}});
    }
    return out;
}

// Runs estimate_qc at every p, recording no-crossing failures instead of aborting.
std::vector<std::optional<QcEstimate>> qc_over_grid(const RunConfig& c, std::uint64_t seed, double pc_d,
                                                    Outputs& out) {
    std::vector<std::optional<QcEstimate>> ests;
    for (double p : c.p_grid) {
        try {
            ests.emplace_back(estimate_qc(ladder_for(c, p, pc_d), p, c.replicates, seed, qc_options(c, pc_d)));
        } catch (const NoCrossingError& e) {
            ests.emplace_back();
            out.records.push_back({{"schema", "anisoperc.qc.v1"},
                                   {"master_seed", seed},
                                   {"p", p},
                                   {"error", "no_crossing"},
                                   {"message", e.what()}});
            out.exit_code = e.exit_code();
            out.message = e.what();
        }
    }
    return ests;
}

Outputs run_estimate_qc(const RunConfig& c, std::uint64_t seed) {
    Outputs out;
    const ConstantsTable constants = constants_for(c);
    const double pc_d = constants.bond_threshold(c.lattice.d);
    out.table.schema = "anisoperc.qc.v1";
    out.table.header = {"master_seed", "d",          "s",     "boundary",       "sizes",     "replicates",
                        "p",           "qc_hat",     "ci_halfwidth", "method",  "degenerate", "at_or_above_pc",
                        "r_at_crossing", "qc_lower_bound", "kesten_line"};
    const auto ests = qc_over_grid(c, seed, pc_d, out);
    for (std::size_t i = 0; i < ests.size(); ++i) {
        if (!ests[i]) continue;
        const QcEstimate& e = *ests[i];
        json rec = qc_json(e, seed);
        std::string lb, kl;
        if (c.lattice.d == 1 && e.p < 1.0) {
            const double v = qc_lower_bound({e.p, 0.0, 1, c.lattice.s, chi_1_exact(e.p)});
            rec["qc_lower_bound"] = v;
            lb = fmt(v);
        }
        if (c.lattice.d == 1 && c.lattice.s == 1) {
            rec["kesten_line"] = kesten_line(e.p);
            kl = fmt(kesten_line(e.p));
        }
        out.records.push_back(rec);
        out.table.rows.push_back({fmt(seed), fmt(c.lattice.d), fmt(c.lattice.s), to_string(c.lattice.boundary),
                                  sizes_text(e.sizes_used), fmt(e.replicates), fmt(e.p), fmt(e.qc_hat),
                                  fmt(e.ci_halfwidth), to_string(e.method), fmt(e.degenerate), fmt(e.at_or_above_pc),
                                  fmt(e.r_at_crossing), lb, kl});
    }
    return out;
}

Outputs run_fit_psi(const RunConfig& c, std::uint64_t seed) {
    Outputs out;
    const ConstantsTable constants = constants_for(c);
    const int d = c.lattice.d;
    const double pc_d = constants.bond_threshold(d);
    for (double p : c.p_grid)
        if (!(p < pc_d)) throw ConfigError("config: p_grid: fit-psi needs every p below p_c(d) = " + fmt(pc_d));
    out.table.schema = "anisoperc.fit_psi.v1";
    out.table.header = {"master_seed", "d", "s", "p", "pc_minus_p", "qc_hat", "ci_halfwidth", "chi_d", "chi_se",
                        "qc_times_chi", "sizes", "replicates"};
    const auto ests = qc_over_grid(c, seed, pc_d, out);
    std::vector<QcEstimate> ok;
    std::vector<double> ps;
    std::vector<ChiEstimate> chis;
    for (const auto& e : ests) {
        if (!e) continue;
        ok.push_back(*e);
        out.records.push_back(qc_json(*e, seed));
        const ChiEstimate chi = chi_d_at(c, e->p, seed);
        ps.push_back(e->p);
        chis.push_back(chi);
        out.table.rows.push_back({fmt(seed), fmt(d), fmt(c.lattice.s), fmt(e->p), fmt(pc_d - e->p), fmt(e->qc_hat),
                                  fmt(e->ci_halfwidth), fmt(chi.chi), fmt(chi.se),
                                  fmt(conjecture2_probe(e->qc_hat, chi.chi)), sizes_text(e->sizes_used),
                                  fmt(e->replicates)});
    }
    if (ok.size() < 3) {
        if (out.exit_code == 0) throw DomainError("fit-psi: fewer than 3 usable estimates");
        return out;
    }
    const PsiFit psi = fit_psi(d, c.lattice.s, pc_d, ok);
    const ChiFit gam = fit_gamma(d, pc_d, ps, chis);
    PsiGammaReport rep = psi_gamma_report(psi, gam);
    if (auto ref = constants.find("gamma_" + std::to_string(d))) rep.gamma_reference = ref->value;
    auto points = [](const std::vector<FitPoint>& pts) {
        json a = json::array();
        for (const auto& pt : pts) a.push_back({{"p", pt.p}, {"value", pt.value}, {"weight", pt.weight}});
        return a;
    };
    out.records.push_back({{"schema", "anisoperc.psi_fit.v1"},
                           {"master_seed", seed},
                           {"d", psi.d},
                           {"s", psi.s},
                           {"pc_d", psi.pc_d},
                           {"points", points(psi.points)},
                           {"psi_hat", psi.psi_hat},
                           {"amplitude_hat", psi.amplitude_hat},
                           {"stderr", psi.stderr_},
                           {"r_squared", psi.r_squared}});
    out.records.push_back({{"schema", "anisoperc.chi_fit.v1"},
                           {"master_seed", seed},
                           {"d", gam.d},
                           {"pc_d", gam.pc_d},
                           {"chi_source", d == 1 ? "exact" : "simulated"},
                           {"points", points(gam.points)},
                           {"gamma_hat", gam.gamma_hat},
                           {"amplitude_hat", gam.amplitude_hat},
                           {"stderr", gam.stderr_},
                           {"r_squared", gam.r_squared}});
    out.records.push_back({{"schema", "anisoperc.psi_gamma.v1"},
                           {"master_seed", seed},
                           {"d", rep.d},
                           {"psi_hat", rep.psi_hat},
                           {"psi_se", rep.psi_se},
                           {"gamma_hat", rep.gamma_hat},
                           {"gamma_se", rep.gamma_se},
                           {"difference", rep.difference},
                           {"pooled_se", rep.pooled_se},
                           {"consistent_with_equal", rep.consistent_with_equal},
                           {"consistent_with_le", rep.consistent_with_le},
                           {"gamma_reference", rep.gamma_reference ? json(*rep.gamma_reference) : json(nullptr)}});
    return out;
}

std::string status_text(RegimeStatus s) {
    switch (s) {
        case RegimeStatus::valid: return "valid";
        case RegimeStatus::invalid_regime: return "invalid_regime";
        case RegimeStatus::nonpositive: return "nonpositive";
    }
    return "valid";
}

Outputs run_bounds_table(const RunConfig& c, std::uint64_t seed) {
    Outputs out;
    const ConstantsTable constants = constants_for(c);
    const int d = c.lattice.d, s = c.lattice.s;
    const double pc_d = constants.bond_threshold(d);
    const std::optional<Constant> site = constants.find("site_pc_" + std::to_string(s));
    out.table.schema = "anisoperc.bounds.v1";
    out.table.header = {"master_seed", "d", "s", "p", "chi_d", "chi_se", "chi_source", "qc_lower_bound", "q",
                        "series_bound", "kesten_line", "epsilon", "alpha", "cert_margin", "cert_status"};
    for (double p : c.p_grid) {
        if (!(p < pc_d)) {
            out.records.push_back({{"schema", "anisoperc.bounds.v1"}, {"master_seed", seed}, {"p", p},
                                   {"note", "p >= p_c(d): chi_d infinite, lower bound 0"}});
            continue;
        }
        const ChiEstimate chi = chi_d_at(c, p, seed);
        const double lb = qc_lower_bound({p, 0.0, d, s, chi.chi});
        std::vector<double> qs = c.q_grid;
        if (qs.empty()) qs.push_back(0.5 * lb);
        for (double q : qs) {
            const SeriesBound sb = series_chi_bound({p, q, d, s, chi.chi});
            json rec{{"schema", "anisoperc.bounds.v1"},
                     {"master_seed", seed},
                     {"p", p},
                     {"d", d},
                     {"s", s},
                     {"chi_d", chi.chi},
                     {"chi_se", chi.se},
                     {"chi_source", d == 1 ? "exact" : "simulated"},
                     {"qc_lower_bound", lb},
                     {"q", q},
                     {"series_bound", sb.divergent ? json("divergent") : json(sb.value)}};
            std::string kl, margin, status;
            if (d == 1 && s == 1) {
                rec["kesten_line"] = kesten_line(p);
                kl = fmt(kesten_line(p));
            }
            const double eps = c.epsilon_grid.front(), alpha = c.alpha_grid.front();
            if (d == 1 && s >= 2 && site && p > 0.0) {
                const Certificate cert = renorm_certifies_percolation({p, q, s, eps, alpha, site->value});
                rec["certificate"] = {{"epsilon", eps},
                                      {"alpha", alpha},
                                      {"margin", cert.margin},
                                      {"status", status_text(cert.status)},
                                      {"certified", cert.certified}};
                margin = fmt(cert.margin);
                status = status_text(cert.status);
            }
            out.records.push_back(rec);
            out.table.rows.push_back({fmt(seed), fmt(d), fmt(s), fmt(p), fmt(chi.chi), fmt(chi.se),
                                      d == 1 ? "exact" : "simulated", fmt(lb), fmt(q),
                                      sb.divergent ? "divergent" : fmt(sb.value), kl, margin.empty() ? "" : fmt(eps),
                                      margin.empty() ? "" : fmt(alpha), margin, status});
        }
    }
    return out;
}

Outputs run_oracle_check(const RunConfig& c, std::uint64_t seed) {
    Outputs out;
    const std::string path = c.golden_path.empty() ? std::string(ANISOPERC_DATA_DIR) + "/golden_oracle.jsonl" : c.golden_path;
    const std::vector<GoldenRecord> fresh = compute_golden_suite(c.workers);
    out.table.schema = "anisoperc.oracle.v1";
    out.table.header = {"master_seed", "name", "p", "q", "chi_origin", "chi_mean", "cross_any", "cross_d", "cross_s",
                        "golden_diffs", "dc_max_abs_diff", "monotone"};
    if (c.write_golden) {
        write_golden(path, fresh);
        out.records.push_back({{"schema", "anisoperc.oracle.v1"}, {"master_seed", seed}, {"wrote_golden", path},
                               {"records", fresh.size()}});
    }
    const std::vector<GoldenRecord> stored = c.write_golden ? fresh : read_golden(path);
    const std::vector<GoldenDiff> diffs = diff_golden(stored, fresh);
    int bad = 0;
    for (const auto& spec : golden_lattices()) {
        const TinyGraph g = TinyGraph::from_lattice(spec);
        const ExactPolynomials poly(g, c.workers);
        const bool monotone = exact_monotonicity_check(g).monotone;
        for (const auto& pr : golden_params()) {
            const std::string name = golden_name(spec);
            double dc = 0.0;
            for (int v = 0; v < g.vertices; ++v)
                dc = std::max(dc, std::abs(exact_by_deletion_contraction(g, pr, TargetEvent::connect(0, v)) -
                                           poly.connected(0, v, pr)));
            for (const auto& ev : event_names())
                dc = std::max(dc, std::abs(exact_by_deletion_contraction(g, pr, TargetEvent::named(ev)) -
                                           poly.event(ev, pr)));
            const ExactResult r = poly.evaluate(pr);
            std::ostringstream label;
            label << name << "@(" << pr.p << "," << pr.q << ")";
            json dj = json::array();
            for (const auto& df : diffs)
                if (df.name == label.str()) dj.push_back({{"field", df.field}, {"expected", df.expected}, {"actual", df.actual}});
            if (!dj.empty() || dc > 1e-12 || !monotone) ++bad;
            out.records.push_back({{"schema", "anisoperc.oracle.v1"},
                                   {"master_seed", seed},
                                   {"name", name},
                                   {"lattice", spec_json(spec)},
                                   {"p", pr.p},
                                   {"q", pr.q},
                                   {"chi_origin", r.chi_origin},
                                   {"chi_mean", r.chi_mean},
                                   {"events", r.event_probs},
                                   {"golden_diffs", dj},
                                   {"dc_max_abs_diff", dc},
                                   {"monotone", monotone}});
            out.table.rows.push_back({fmt(seed), name, fmt(pr.p), fmt(pr.q), fmt(r.chi_origin), fmt(r.chi_mean),
                                      fmt(r.event_probs.at("cross_any")), fmt(r.event_probs.at("cross_d")),
                                      fmt(r.event_probs.at("cross_s")), fmt(static_cast<int>(dj.size())), fmt(dc),
                                      fmt(monotone)});
        }
    }
    // Stored records with no fresh counterpart.
    for (const auto& df : diffs)
        if (df.field == "missing" || df.field == "unexpected") ++bad;
    if (bad > 0) {
        out.exit_code = 1;
        out.message = std::to_string(bad) + " oracle records disagree with " + path;
    }
    return out;
}

Outputs run_certify(const RunConfig& c, std::uint64_t seed) {
    Outputs out;
    const ConstantsTable constants = constants_for(c);
    const int s = c.lattice.s;
    const std::optional<Constant> site = constants.find("site_pc_" + std::to_string(s));
    if (!site) throw ConfigError("config: constants_overrides: no site threshold site_pc_" + std::to_string(s));
    out.table.schema = "anisoperc.certify.v1";
    out.table.header = {"master_seed", "s", "p", "q", "epsilon", "alpha", "run_tail", "pbar_lower", "site_threshold",
                        "margin", "q_hypothesis", "hypothesis_holds", "status", "certified"};
    int invalid = 0;
    for (double p : c.p_grid)
        for (double q : c.q_grid)
            for (double eps : c.epsilon_grid)
                for (double alpha : c.alpha_grid) {
                    if (!(p > 0.0 && p < 1.0)) throw ConfigError("config: p_grid: certify needs 0 < p < 1");
                    const RenormInputs in{p, q, s, eps, alpha, site->value};
                    const Certificate cert = renorm_certifies_percolation(in);
                    const GoodVertexBound gv = good_vertex_prob_lower(in);
                    if (cert.status == RegimeStatus::invalid_regime) ++invalid;
                    out.records.push_back({{"schema", "anisoperc.certify.v1"},
                                           {"master_seed", seed},
                                           {"s", s},
                                           {"p", p},
                                           {"q", q},
                                           {"epsilon", eps},
                                           {"alpha", alpha},
                                           {"run_tail", gv.run_tail},
                                           {"pbar_lower", cert.pbar_lower},
                                           {"site_threshold", site->value},
                                           {"margin", cert.margin},
                                           {"q_hypothesis", cert.q_hypothesis},
                                           {"hypothesis_holds", cert.hypothesis_holds},
                                           {"status", status_text(cert.status)},
                                           {"certified", cert.certified}});
                    out.table.rows.push_back({fmt(seed), fmt(s), fmt(p), fmt(q), fmt(eps), fmt(alpha),
                                              fmt(gv.run_tail), fmt(cert.pbar_lower), fmt(site->value),
                                              fmt(cert.margin), fmt(cert.q_hypothesis), fmt(cert.hypothesis_holds),
                                              status_text(cert.status), fmt(cert.certified)});
                }
    if (invalid > 0) {
        out.exit_code = static_cast<int>(ErrorKind::invalid_regime);
        out.message = std::to_string(invalid) + " point(s) outside the regime p^{(1+p)/(1-p) eps} >= 1 - 3 eps";
    }
    return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("output: cannot write " + tmp.string());
        out << content;
        if (!out) throw ConfigError("output: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string utc_stamp(std::chrono::system_clock::time_point t, const char* format) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, format, &tm);
    return buf;
}

}  // namespace

Outputs execute(const RunConfig& config, std::uint64_t seed) {
    config.validate();
    if (config.experiment == "sweep") return run_sweep(config, seed);
    if (config.experiment == "estimate-qc") return run_estimate_qc(config, seed);
    if (config.experiment == "fit-psi") return run_fit_psi(config, seed);
    if (config.experiment == "bounds-table") return run_bounds_table(config, seed);
    if (config.experiment == "oracle-check") return run_oracle_check(config, seed);
    return run_certify(config, seed);
}

RunOutcome run_experiment(const RunConfig& config) {
    config.validate();
    const SeedResolution seed = resolve_seed(config.master_seed);
    RunConfig echo = config;
    echo.master_seed = seed.seed;
    const auto started = std::chrono::system_clock::now();
    const auto t0 = std::chrono::steady_clock::now();
    const std::string name =
        (config.run_name.empty() ? utc_stamp(started, "%Y%m%dT%H%M%SZ") : config.run_name) + "-seed" + std::to_string(seed.seed);
    namespace fs = std::filesystem;
    const fs::path final_dir = fs::path(config.output_dir) / config.experiment / name;
    const fs::path staging = final_dir.string() + ".partial";
    if (fs::exists(final_dir)) throw ConfigError("output: " + final_dir.string() + " already exists");
    fs::remove_all(staging);
    fs::create_directories(staging);

    json manifest{{"schema", "anisoperc.manifest.v1"},
                  {"experiment", config.experiment},
                  {"master_seed", seed.seed},
                  {"seed_source", seed.source},
                  {"revision", source_revision()},
                  {"generator", kGeneratorName},
                  {"config", echo.to_json()}};
    auto timing = [&](const std::string& status) {
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json t{{"schema", "anisoperc.timing.v1"},
               {"status", status},
               {"wall_seconds", wall},
               {"started_utc", utc_stamp(started, "%Y-%m-%dT%H:%M:%SZ")},
               {"kernels", std::string(kernels::active().name)},
               {"workers", resolve_workers(config.workers)}};
        write_atomic(staging / "timing.json", t.dump(2) + "\n");
        return wall;
    };
    Outputs outputs;
    try {
        outputs = execute(echo, seed.seed);
    } catch (const Error& e) {
        manifest["status"] = "failed";
        manifest["exit_code"] = e.exit_code();
        manifest["message"] = e.what();
        write_atomic(staging / "manifest.json", manifest.dump(2) + "\n");
        timing("failed");
        throw;
    }
    std::string jsonl;
    for (const auto& r : outputs.records) jsonl += r.dump() + "\n";
    write_atomic(staging / "records.jsonl", jsonl);
    write_atomic(staging / "table.csv", to_csv(outputs.table));
    manifest["status"] = outputs.exit_code == 0 ? "ok" : "completed_with_errors";
    manifest["exit_code"] = outputs.exit_code;
    manifest["message"] = outputs.message;
    manifest["csv_schema"] = outputs.table.schema;
    manifest["files"] = {"records.jsonl", "table.csv", "timing.json"};
    manifest["records"] = outputs.records.size();
    write_atomic(staging / "manifest.json", manifest.dump(2) + "\n");
    RunOutcome outcome;
    outcome.wall_seconds = timing(outputs.exit_code == 0 ? "ok" : "completed_with_errors");
    fs::rename(staging, final_dir);
    outcome.run_dir = final_dir;
    outcome.exit_code = outputs.exit_code;
    outcome.message = outputs.message;
    return outcome;
}

}  // namespace anisoperc
