#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "anisoperc/lattice.hpp"

namespace anisoperc {

struct Params {
    double p = 0.0;  // D-edge open probability
    double q = 0.0;  // S-edge open probability

    void validate() const;
};

class BondConfig {
public:
    BondConfig(const LatticeSpec& spec, const Params& params, std::uint64_t seed, Index edge_count,
               std::vector<std::uint64_t> open_bits)
        : spec_(spec), params_(params), seed_(seed), edge_count_(edge_count), open_bits_(std::move(open_bits)) {}

    const LatticeSpec& spec() const { return spec_; }
    const Params& params() const { return params_; }
    std::uint64_t seed() const { return seed_; }
    Index edge_count() const { return edge_count_; }
    const std::vector<std::uint64_t>& open_bits() const { return open_bits_; }

    bool is_open(Index e) const { return (open_bits_[static_cast<std::size_t>(e) / 64] >> (e % 64)) & 1u; }
    void set_open(Index e, bool open);
    Index count_open(Index first, Index last) const;

private:
    LatticeSpec spec_;
    Params params_;
    std::uint64_t seed_;
    Index edge_count_;
    std::vector<std::uint64_t> open_bits_;
};

// One uniform label per edge; thresholding at (p, q) gives a BondConfig, and
// the open set only grows as (p, q) increases.
class CoupledLabels {
public:
    CoupledLabels(const LatticeSpec& spec, std::uint64_t seed, std::uint32_t replicate);

    const LatticeSpec& spec() const { return spec_; }
    const std::vector<std::uint32_t>& labels() const { return labels_; }
    double uniform(Index e) const { return static_cast<double>(labels_[static_cast<std::size_t>(e)]) * 0x1.0p-32; }

    BondConfig threshold(const Params& params) const;

private:
    LatticeSpec spec_;
    std::uint64_t seed_;
    Index d_edges_;
    std::vector<std::uint32_t> labels_;
};

CoupledLabels sample_config_coupled(const LatticeSpec& spec, std::uint64_t seed, std::uint32_t replicate = 0);
BondConfig sample_config(const LatticeSpec& spec, const Params& params, std::uint64_t seed,
                         std::uint32_t replicate = 0);

struct ClusterStats {
    Index vertex_count = 0;
    std::vector<Index> cluster_sizes;  // descending
    Index largest = 0;
    Index origin_cluster_size = 0;
    std::uint64_t sum_squares = 0;
    std::vector<bool> wraps;  // periodic only, per direction
    std::vector<bool> spans;  // free only, per direction

    bool crossed() const;
    // Vertex-averaged cluster size. The largest cluster is dropped when
    // requested, or by default when some cluster wraps/spans.
    double mean_cluster_size(bool exclude_largest) const;
    double mean_cluster_size() const { return mean_cluster_size(crossed()); }
};

ClusterStats cluster_stats(const BondConfig& config);

// Which directions count for the crossing observable.
enum class CrossingAxes { any, d_only, s_only };

std::uint32_t axes_mask(const LatticeSpec& spec, CrossingAxes axes);

struct SweepOptions {
    // Stop after this many S-edge insertions (negative: insert all M_s).
    Index max_open_s = -1;
    int workers = 0;
};

// Microcanonical observables at fixed p against m = number of open S-edges.
struct SweepCurve {
    static constexpr Index kNever = std::numeric_limits<Index>::max();

    LatticeSpec spec;
    double p = 0.0;
    int replicates = 0;
    std::uint64_t seed = 0;
    Index vertex_count = 0;
    Index total_s = 0;  // M_s
    Index m_max = 0;    // arrays cover m = 0..m_max

    std::vector<double> mean_cluster_size;
    std::vector<double> mean_cluster_size_se;
    std::vector<double> largest_frac;
    std::vector<double> largest_frac_se;
    std::vector<double> crossing_freq;  // any direction

    // first_crossing[r][k]: smallest m at which replicate r crossed in
    // direction k, kNever if not within m_max.
    std::vector<std::vector<Index>> first_crossing;

    bool truncated() const { return m_max < total_s; }
    Index first_crossing_for(std::size_t replicate, std::uint32_t mask) const;
    std::vector<double> crossing_freq_for(std::uint32_t mask) const;
};

SweepCurve sweep_q(const LatticeSpec& spec, double p, int replicates, std::uint64_t seed,
                   const SweepOptions& options = {});

// Binomial(n, q) probabilities on the window [first, first + size) holding all
// mass above ~1e-30, built by a log-space recurrence and normalised.
struct BinomialWindow {
    Index first = 0;
    std::vector<double> weights;

    Index last() const { return first + static_cast<Index>(weights.size()) - 1; }
};

BinomialWindow binomial_window(Index n, double q);

struct CanonicalPoint {
    double q = 0.0;
    double crossing = 0.0;
    double crossing_se = 0.0;
    double mean_cluster_size = 0.0;
    double mean_cluster_size_se = 0.0;  // conservative: sqrt(sum_m w_m se_m^2)
    double largest_frac = 0.0;
    double largest_frac_se = 0.0;
};

// Binomial mixture over m: canonical(q) = sum_m B(M_s, q, m) micro[m].
CanonicalPoint convolve_canonical(const SweepCurve& curve, double q, CrossingAxes axes = CrossingAxes::any);

// Per-replicate canonical crossing probability P(Bin(M_s, q) >= m*_r) on a q-grid.
// Row-major [replicate][grid point].
std::vector<double> replicate_crossing_matrix(const SweepCurve& curve, const std::vector<double>& q_grid,
                                              CrossingAxes axes);

// Per-replicate P(Bin(total, q) >= firsts[r]) on a grid, row-major [replicate][grid].
std::vector<double> first_event_matrix(Index total, const std::vector<Index>& firsts,
                                       const std::vector<double>& q_grid);

// Good-vertex indicators of the renormalisation block construction (d = 1).
// For each vertex u = (0, t) the run W_u is its open cluster inside the line
// Z x {t}; u is good when |W_u| > min_run and every increasing S-direction has
// an open edge leaving W_u. Returned in order of t (row-major over Z^s).
std::vector<bool> good_vertices(const BondConfig& config, double min_run);

// Site percolation on the s-dimensional torus of the given side: sites are
// opened in random order and the first count at which some cluster wraps is
// recorded per replicate.
std::vector<Index> site_first_wrap(int s, int side, int replicates, std::uint64_t seed, int workers = 0);

}  // namespace anisoperc
