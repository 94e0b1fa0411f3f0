#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "anisoperc/constants.hpp"
#include "anisoperc/estimator.hpp"
#include "anisoperc/lattice.hpp"

namespace anisoperc {

inline constexpr const char* kSeedEnvVar = "ANISOPERC_SEED";
inline constexpr std::uint64_t kFallbackSeed = 20240611;

const std::vector<std::string>& experiment_names();

struct EstimatorConfig {
    int grid_points = 200;
    int bootstrap = 200;
    double q_min = 0.0;
    double q_max = 1.0;
    CrossingAxes axes = CrossingAxes::any;
    QcMethod method = QcMethod::wrap_crossing;
};

struct RunConfig {
    std::string experiment = "sweep";
    LatticeSpec lattice{1, 1, 64, 64, Boundary::periodic};
    // (side_d, side_s) per size; empty means {lattice, lattice doubled}.
    std::vector<std::pair<int, int>> ladder;
    // When set, side_d = round(stretch_k * side_s / (pc_d - p)^stretch_exponent)
    // for every size, tracking the D-sublattice correlation length.
    std::optional<double> stretch_k;
    double stretch_exponent = 1.0;
    std::vector<double> p_grid{0.5};
    std::vector<double> q_grid;
    int replicates = 100;
    std::optional<std::uint64_t> master_seed;
    std::string output_dir = "runs";
    std::string run_name;
    int workers = 0;
    std::map<std::string, double> constants_overrides;
    EstimatorConfig estimator;
    std::vector<double> epsilon_grid{0.1};
    std::vector<double> alpha_grid{50.0};
    // Simulated chi_d for d >= 2: box side and replicates.
    int chi_side = 256;
    int chi_replicates = 20;
    std::string golden_path;
    bool write_golden = false;

    // Strict: unknown keys and wrong types are config errors naming the field.
    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    void validate() const;
};

RunConfig load_run_config(const std::string& path);

struct SeedResolution {
    std::uint64_t seed = 0;
    std::string source;  // "config", "env" or "default"
};

// Config/flag seed first, then ANISOPERC_SEED, then a fixed default.
SeedResolution resolve_seed(const std::optional<std::uint64_t>& given);

struct CsvTable {
    std::string schema;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string csv_escape(const std::string& field);
// The schema string heads the first column of the header and of every row.
std::string to_csv(const CsvTable& table);
// Shortest text that round-trips the double.
std::string format_double(double x);

struct Outputs {
    std::vector<nlohmann::json> records;
    CsvTable table;
    int exit_code = 0;
    std::string message;
};

// Runs the experiment in memory. Typed errors propagate.
Outputs execute(const RunConfig& config, std::uint64_t seed);

struct RunOutcome {
    std::filesystem::path run_dir;
    int exit_code = 0;
    std::string message;
    double wall_seconds = 0.0;
};

// Runs and persists: <output_dir>/<experiment>/<run_name|timestamp>-seed<seed>/
// with manifest.json, records.jsonl, table.csv and timing.json. Files are staged
// in a ".partial" directory that is renamed only on success.
RunOutcome run_experiment(const RunConfig& config);

std::string source_revision();

}  // namespace anisoperc
