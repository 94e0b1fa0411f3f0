#include "anisoperc/lattice.hpp"

#include <limits>

#include "anisoperc/errors.hpp"

namespace anisoperc {

std::string to_string(Boundary b) { return b == Boundary::free ? "free" : "periodic"; }

Boundary boundary_from_string(const std::string& name) {
    if (name == "free") return Boundary::free;
    if (name == "periodic") return Boundary::periodic;
    throw ConfigError("unknown boundary '" + name + "' (expected free or periodic)");
}

std::string to_string(EdgeClass c) { return c == EdgeClass::DEdge ? "D" : "S"; }

void LatticeSpec::validate() const {
    if (d < 1 || s < 1) throw ConfigError("lattice: d and s must be >= 1");
    if (d + s > kMaxDims) throw CapacityError("lattice: d + s exceeds " + std::to_string(kMaxDims));
    if (side_d < 2 || side_s < 2) throw ConfigError("lattice: side_d and side_s must be >= 2");
}

Lattice::Lattice(const LatticeSpec& spec) : spec_(spec) {
    spec_.validate();
    // Indices are stored as 32-bit inside the union-find.
    constexpr Index limit = std::numeric_limits<std::int32_t>::max();
    Index n = 1;
    for (int k = 0; k < dims(); ++k) {
        side_[k] = spec_.side(k);
        stride_[k] = n;
        if (n > limit / side_[k]) throw CapacityError("lattice: vertex count exceeds 2^31-1");
        n *= side_[k];
    }
    vertex_count_ = n;
    block_offset_[0] = 0;
    for (int k = 0; k < dims(); ++k) {
        full_[k] = spec_.boundary == Boundary::periodic && side_[k] > 2;
        const Index count = full_[k] ? n : n / side_[k] * (side_[k] - 1);
        block_offset_[k + 1] = block_offset_[k] + count;
    }
    if (edge_count() > std::numeric_limits<std::uint32_t>::max())
        throw CapacityError("lattice: edge count exceeds 2^32-1");
}

int Lattice::direction_of(Index e) const {
    int k = 0;
    while (e >= block_offset_[k + 1]) ++k;
    return k;
}

EdgeId Lattice::edge(Index e) const {
    EdgeId id;
    id.index = e;
    id.direction = direction_of(e);
    id.cls = class_of_direction(id.direction);
    id.u = edge_base(id.direction, e - block_offset_[id.direction]);
    id.v = neighbor(id.direction, id.u);
    return id;
}

VertexId Lattice::vertex(Index v) const {
    VertexId id;
    id.index = v;
    id.coords.resize(dims());
    for (int k = 0; k < dims(); ++k) id.coords[k] = coord(v, k);
    return id;
}

Index Lattice::index_of(const std::vector<int>& coords) const {
    Index v = 0;
    for (int k = 0; k < dims(); ++k) v += stride_[k] * coords[k];
    return v;
}

std::vector<EdgeId> build_lattice(const LatticeSpec& spec) {
    const Lattice lattice(spec);
    std::vector<EdgeId> edges;
    edges.reserve(static_cast<std::size_t>(lattice.edge_count()));
    for (int k = 0; k < lattice.dims(); ++k) {
        const Index count = lattice.block_size(k);
        for (Index r = 0; r < count; ++r) {
            EdgeId e;
            e.index = lattice.block_offset(k) + r;
            e.direction = k;
            e.cls = lattice.class_of_direction(k);
            e.u = lattice.edge_base(k, r);
            e.v = lattice.neighbor(k, e.u);
            edges.push_back(e);
        }
    }
    return edges;
}

EdgeClass classify_edge(const Lattice& lattice, const EdgeId& e) {
    for (int k = 0; k < lattice.dims(); ++k) {
        if (lattice.coord(e.u, k) != lattice.coord(e.v, k)) return lattice.class_of_direction(k);
    }
    throw DomainError("classify_edge: endpoints coincide");
}

}  // namespace anisoperc
