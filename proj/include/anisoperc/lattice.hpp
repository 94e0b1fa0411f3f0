#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace anisoperc {

using Index = std::int64_t;

enum class Boundary { free, periodic };

enum class EdgeClass : std::uint8_t { DEdge, SEdge };

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& name);
std::string to_string(EdgeClass c);

// Box of Z^d x Z^s. The first d coordinates belong to the p-sublattice.
struct LatticeSpec {
    int d = 1;
    int s = 1;
    int side_d = 2;
    int side_s = 2;
    Boundary boundary = Boundary::periodic;

    void validate() const;
    int dims() const { return d + s; }
    int side(int dir) const { return dir < d ? side_d : side_s; }

    bool operator==(const LatticeSpec&) const = default;
};

struct VertexId {
    Index index = 0;
    std::vector<int> coords;
};

struct EdgeId {
    Index index = 0;
    EdgeClass cls = EdgeClass::DEdge;
    Index u = 0;
    Index v = 0;
    int direction = 0;  // v = u + e_direction (mod side under periodic)
};

constexpr int kMaxDims = 8;

// Finite-volume geometry with implicit edge storage.
//
// Vertices are numbered row-major with coordinate 0 varying fastest, so the
// Z^d coordinates are the low-order digits. Edges are grouped by direction:
// all D-edges (directions 0..d-1) come before all S-edges. Inside a direction
// block, edges are ordered by their lower endpoint ("base"). A periodic
// direction of side 2 has its doubled edge collapsed to one.
class Lattice {
public:
    explicit Lattice(const LatticeSpec& spec);

    const LatticeSpec& spec() const { return spec_; }
    int dims() const { return spec_.dims(); }
    Index vertex_count() const { return vertex_count_; }
    Index edge_count() const { return block_offset_[dims()]; }
    Index d_edge_count() const { return block_offset_[spec_.d]; }
    Index s_edge_count() const { return edge_count() - d_edge_count(); }

    int side(int dir) const { return side_[dir]; }
    Index stride(int dir) const { return stride_[dir]; }
    // True when the direction carries a wrap-around edge (periodic, side > 2).
    bool has_wrap_edges(int dir) const { return full_[dir]; }

    Index block_offset(int dir) const { return block_offset_[dir]; }
    Index block_size(int dir) const { return block_offset_[dir + 1] - block_offset_[dir]; }

    int direction_of(Index edge) const;
    EdgeClass class_of_direction(int dir) const { return dir < spec_.d ? EdgeClass::DEdge : EdgeClass::SEdge; }

    // Endpoints of the rank-th edge in direction dir.
    Index edge_base(int dir, Index rank) const {
        if (full_[dir]) return rank;
        const Index st = stride_[dir];
        const Index len = side_[dir] - 1;
        const Index low = rank % st;
        const Index rest = rank / st;
        return low + st * (rest % len + side_[dir] * (rest / len));
    }
    Index neighbor(int dir, Index base) const {
        const Index st = stride_[dir];
        const int c = coord(base, dir);
        return c == side_[dir] - 1 ? base - st * (side_[dir] - 1) : base + st;
    }

    // Inverse of edge_base: rank of the edge leaving base in direction dir,
    // or -1 when base sits on the far face of a direction without wrap edges.
    Index edge_rank(int dir, Index base) const {
        if (full_[dir]) return base;
        const Index st = stride_[dir];
        const Index side = side_[dir];
        const Index c = (base / st) % side;
        if (c == side - 1) return -1;
        return base % st + st * (c + (side - 1) * (base / (st * side)));
    }

    EdgeId edge(Index e) const;
    int coord(Index v, int dir) const { return static_cast<int>((v / stride_[dir]) % side_[dir]); }
    VertexId vertex(Index v) const;
    Index index_of(const std::vector<int>& coords) const;

private:
    LatticeSpec spec_;
    Index vertex_count_ = 0;
    std::array<int, kMaxDims> side_{};
    std::array<Index, kMaxDims> stride_{};
    std::array<bool, kMaxDims> full_{};
    std::array<Index, kMaxDims + 1> block_offset_{};
};

// Ordered, deterministic list of every edge.
std::vector<EdgeId> build_lattice(const LatticeSpec& spec);

// Class from the endpoints' differing coordinate.
EdgeClass classify_edge(const Lattice& lattice, const EdgeId& e);

}  // namespace anisoperc
