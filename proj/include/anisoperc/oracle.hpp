#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "anisoperc/lattice.hpp"
#include "anisoperc/sampler.hpp"

namespace anisoperc {

constexpr int kTinyMaxVertices = 16;
constexpr int kTinyMaxEdges = 24;
constexpr int kDeletionContractionMaxEdges = 20;

struct TinyEdge {
    int u = 0;
    int v = 0;
    EdgeClass cls = EdgeClass::DEdge;
    int direction = 0;  // lattice direction; meaningful only for lattice-derived graphs
};

struct TinyGraph {
    int vertices = 0;
    std::vector<TinyEdge> edges;
    // Present when the graph is a lattice; enables wrap/span events.
    std::optional<LatticeSpec> spec;

    static TinyGraph from_lattice(const LatticeSpec& spec);
    static TinyGraph hand(int vertices, std::vector<TinyEdge> edges);

    int d_edges() const;
    int s_edges() const;
    // Throws CapacityError beyond the enumeration budget.
    void validate() const;
};

// Crossing events are wraps on periodic lattices and spans on free ones.
const std::vector<std::string>& event_names();

struct ExactResult {
    int vertices = 0;
    std::vector<double> connectivity;  // vertices x vertices, P(u <-> v)
    double chi_origin = 0.0;           // E|C(0)|
    double chi_mean = 0.0;             // vertex average of E|C(v)|
    std::map<std::string, double> event_probs;

    double connected(int u, int v) const { return connectivity[static_cast<std::size_t>(u * vertices + v)]; }
};

// Integer configuration counts by (#open D-edges, #open S-edges), so every
// probability is an exact polynomial in (p, q).
class ExactPolynomials {
public:
    explicit ExactPolynomials(const TinyGraph& g, int workers = 0);

    ExactResult evaluate(const Params& params) const;
    double connected(int u, int v, const Params& params) const;
    double event(const std::string& name, const Params& params) const;
    const TinyGraph& graph() const { return g_; }

private:
    double poly(const std::uint64_t* counts, const Params& params) const;
    std::size_t pair_index(int u, int v) const;

    TinyGraph g_;
    int nd_ = 0, ns_ = 0;
    std::size_t stride_ = 0;
    std::vector<std::uint64_t> pair_counts_;
    std::vector<std::uint64_t> event_counts_;
};

ExactResult exact_enumerate(const TinyGraph& g, const Params& params);

struct TargetEvent {
    enum class Kind { connect, cross_any, cross_d, cross_s } kind = Kind::connect;
    int u = 0;
    int v = 0;

    static TargetEvent connect(int u, int v) { return {Kind::connect, u, v}; }
    static TargetEvent named(const std::string& name);
};

double exact_by_deletion_contraction(const TinyGraph& g, const Params& params, const TargetEvent& target);

struct MonotonicityReport {
    bool monotone = true;
    int checks = 0;
    int violations = 0;
    double worst_drop = 0.0;
};

// P(0 <-> v) for all v and every crossing event, nondecreasing along both
// axes of the 5x5 grid {0, 1/4, 1/2, 3/4, 1}^2.
MonotonicityReport exact_monotonicity_check(const TinyGraph& g);

struct GoldenRecord {
    std::string name;
    LatticeSpec spec;
    Params params;
    ExactResult result;
};

inline constexpr const char* kGoldenSchema = "anisoperc.golden.v1";

std::vector<LatticeSpec> golden_lattices();
std::vector<Params> golden_params();
std::string golden_name(const LatticeSpec& spec);
std::vector<GoldenRecord> compute_golden_suite(int workers = 0);

void write_golden(const std::string& path, const std::vector<GoldenRecord>& records);
std::vector<GoldenRecord> read_golden(const std::string& path);

struct GoldenDiff {
    std::string name;
    std::string field;
    double expected = 0.0;
    double actual = 0.0;
};

// Bit-for-bit comparison; records are matched by name and parameters.
std::vector<GoldenDiff> diff_golden(const std::vector<GoldenRecord>& expected,
                                    const std::vector<GoldenRecord>& actual);

}  // namespace anisoperc
