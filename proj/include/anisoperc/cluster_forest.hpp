#pragma once

#include <cstdint>
#include <vector>

#include "anisoperc/lattice.hpp"

namespace anisoperc {

// Union-find over lattice vertices, union by size with path halving.
//
// Under periodic boundaries every node keeps its displacement to its parent;
// closing a cycle with nonzero total displacement means the cluster winds
// around the torus in each direction where the winding is nonzero. Under free
// boundaries roots carry a mask of touched faces (bit 2k: coordinate k is 0,
// bit 2k+1: coordinate k is side-1) and a cluster spans k once both are set.
class ClusterForest {
public:
    explicit ClusterForest(const Lattice& lattice);

    void reset();

    // Adds the edge u -> v = u + e_dir. Returns the crossing bits that became
    // set by this edge (bit k: direction k now wrapped / spanned).
    std::uint32_t add_edge(int dir, Index u, Index v);

    Index find(Index x);
    Index cluster_size(Index x) { return size_[static_cast<std::size_t>(find(x))]; }

    Index vertex_count() const { return static_cast<Index>(parent_.size()); }
    Index largest() const { return largest_; }
    Index cluster_count() const { return clusters_; }
    // Sum over clusters of size^2, i.e. N times the vertex-averaged cluster size.
    std::uint64_t sum_squares() const { return sum_squares_; }
    std::uint32_t crossing_mask() const { return crossing_; }

    std::vector<Index> cluster_sizes();

private:
    std::int32_t find_with_offset(std::int32_t x, std::int32_t* acc);

    const Lattice* lattice_;
    int dims_;
    bool periodic_;
    std::vector<std::int32_t> parent_;
    std::vector<std::int32_t> size_;
    std::vector<std::int32_t> offset_;     // periodic: dims_ entries per node
    std::vector<std::uint16_t> faces_;     // free: per node, valid at roots
    std::vector<std::uint16_t> face_init_;
    Index largest_ = 1;
    Index clusters_ = 0;
    std::uint64_t sum_squares_ = 0;
    std::uint32_t crossing_ = 0;
};

}  // namespace anisoperc
