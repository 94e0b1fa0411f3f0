#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <set>
#include <utility>

#include "anisoperc/errors.hpp"
#include "anisoperc/lattice.hpp"

using namespace anisoperc;

namespace {

struct Counts {
    Index d = 0;
    Index s = 0;
};

Counts count_classes(const std::vector<EdgeId>& edges) {
    Counts c;
    for (const auto& e : edges) (e.cls == EdgeClass::DEdge ? c.d : c.s) += 1;
    return c;
}

// Brute force: every unordered vertex pair whose coordinates differ in exactly
// one place by 1 (or by side-1 across a periodic boundary).
std::set<std::pair<Index, Index>> brute_force_pairs(const LatticeSpec& spec, Counts& counts) {
    const Lattice lat(spec);
    std::set<std::pair<Index, Index>> pairs;
    for (Index u = 0; u < lat.vertex_count(); ++u) {
        for (Index v = u + 1; v < lat.vertex_count(); ++v) {
            int differing = 0, dir = -1;
            bool adjacent = true;
            for (int k = 0; k < lat.dims(); ++k) {
                const int a = lat.coord(u, k), b = lat.coord(v, k);
                if (a == b) continue;
                ++differing;
                dir = k;
                const int diff = std::abs(a - b);
                const bool wrap = spec.boundary == Boundary::periodic && diff == lat.side(k) - 1;
                if (diff != 1 && !wrap) adjacent = false;
            }
            if (differing == 1 && adjacent) {
                pairs.emplace(u, v);
                (dir < spec.d ? counts.d : counts.s) += 1;
            }
        }
    }
    return pairs;
}

std::set<std::pair<Index, Index>> edge_pairs(const std::vector<EdgeId>& edges) {
    std::set<std::pair<Index, Index>> pairs;
    for (const auto& e : edges) pairs.emplace(std::min(e.u, e.v), std::max(e.u, e.v));
    return pairs;
}

std::vector<char> serialize(const std::vector<EdgeId>& edges) {
    std::vector<char> out;
    for (const auto& e : edges) {
        const Index fields[] = {e.index, static_cast<Index>(e.cls), e.u, e.v, e.direction};
        const char* raw = reinterpret_cast<const char*>(fields);
        out.insert(out.end(), raw, raw + sizeof(fields));
    }
    return out;
}

}  // namespace

TEST_CASE("2x2 free lattice has two D-edges and two S-edges") {
    const LatticeSpec spec{1, 1, 2, 2, Boundary::free};
    const auto edges = build_lattice(spec);
    CHECK(Lattice(spec).vertex_count() == 4);
    const Counts c = count_classes(edges);
    CHECK(c.d == 2);
    CHECK(c.s == 2);
}

TEST_CASE("2x2 periodic lattice collapses doubled edges") {
    const LatticeSpec spec{1, 1, 2, 2, Boundary::periodic};
    const auto edges = build_lattice(spec);
    CHECK(edges.size() == 4);
    CHECK(edge_pairs(edges).size() == 4);
}

TEST_CASE("d=2 s=1 3x3x3 free lattice edge counts match brute force") {
    const LatticeSpec spec{2, 1, 3, 3, Boundary::free};
    Counts brute;
    const auto pairs = brute_force_pairs(spec, brute);
    CHECK(brute.d == 36);
    CHECK(brute.s == 18);
    const auto edges = build_lattice(spec);
    CHECK(Lattice(spec).vertex_count() == 27);
    const Counts c = count_classes(edges);
    CHECK(c.d == 36);
    CHECK(c.s == 18);
    CHECK(edge_pairs(edges) == pairs);
}

TEST_CASE("edge sets match brute force across shapes and boundaries") {
    for (int d = 1; d <= 2; ++d)
        for (int s = 1; s <= 2; ++s)
            for (int side_d = 2; side_d <= 4; ++side_d)
                for (int side_s = 2; side_s <= 3; ++side_s)
                    for (auto b : {Boundary::free, Boundary::periodic}) {
                        const LatticeSpec spec{d, s, side_d, side_s, b};
                        Counts brute;
                        const auto pairs = brute_force_pairs(spec, brute);
                        const auto edges = build_lattice(spec);
                        CAPTURE(d);
                        CAPTURE(s);
                        CAPTURE(side_d);
                        CAPTURE(side_s);
                        REQUIRE(edges.size() == pairs.size());
                        CHECK(edge_pairs(edges) == pairs);
                        const Counts c = count_classes(edges);
                        CHECK(c.d == brute.d);
                        CHECK(c.s == brute.s);
                        const Lattice lat(spec);
                        CHECK(c.d == lat.d_edge_count());
                        CHECK(c.s == lat.s_edge_count());
                    }
}

TEST_CASE("periodic lattices with sides > 2 have d*N D-edges and s*N S-edges") {
    for (auto spec : {LatticeSpec{1, 1, 5, 3, Boundary::periodic}, LatticeSpec{2, 1, 4, 3, Boundary::periodic},
                      LatticeSpec{1, 2, 3, 4, Boundary::periodic}, LatticeSpec{2, 2, 3, 3, Boundary::periodic}}) {
        const Lattice lat(spec);
        CHECK(lat.d_edge_count() == spec.d * lat.vertex_count());
        CHECK(lat.s_edge_count() == spec.s * lat.vertex_count());
        std::vector<int> degree(static_cast<std::size_t>(lat.vertex_count()));
        for (const auto& e : build_lattice(spec)) {
            ++degree[static_cast<std::size_t>(e.u)];
            ++degree[static_cast<std::size_t>(e.v)];
        }
        CHECK(std::all_of(degree.begin(), degree.end(), [&](int x) { return x == 2 * spec.dims(); }));
    }
}

TEST_CASE("classify_edge follows the differing coordinate") {
    const LatticeSpec spec{1, 1, 3, 3, Boundary::free};
    const Lattice lat(spec);
    EdgeId horizontal{0, EdgeClass::SEdge, lat.index_of({0, 0}), lat.index_of({1, 0}), 0};
    EdgeId vertical{0, EdgeClass::DEdge, lat.index_of({0, 0}), lat.index_of({0, 1}), 1};
    CHECK(classify_edge(lat, horizontal) == EdgeClass::DEdge);
    CHECK(classify_edge(lat, vertical) == EdgeClass::SEdge);

    const LatticeSpec wide{2, 2, 3, 3, Boundary::periodic};
    const Lattice lat2(wide);
    for (const auto& e : build_lattice(wide)) {
        CHECK(classify_edge(lat2, e) == e.cls);
        CHECK((e.cls == EdgeClass::SEdge) == (e.direction >= wide.d));
    }
}

TEST_CASE("edge endpoints sit at L1 distance 1 modulo wrap") {
    const LatticeSpec spec{2, 1, 4, 3, Boundary::periodic};
    const Lattice lat(spec);
    for (const auto& e : build_lattice(spec)) {
        int dist = 0;
        for (int k = 0; k < lat.dims(); ++k) {
            const int diff = std::abs(lat.coord(e.u, k) - lat.coord(e.v, k));
            dist += std::min(diff, lat.side(k) - diff);
        }
        CHECK(dist == 1);
        const EdgeId decoded = lat.edge(e.index);
        CHECK(decoded.u == e.u);
        CHECK(decoded.v == e.v);
        CHECK(lat.edge_rank(e.direction, e.u) == e.index - lat.block_offset(e.direction));
    }
}

TEST_CASE("edge list is byte-identical across calls") {
    const LatticeSpec spec{1, 2, 5, 4, Boundary::periodic};
    CHECK(serialize(build_lattice(spec)) == serialize(build_lattice(spec)));
}

TEST_CASE("vertex index and coordinates are a bijection") {
    const LatticeSpec spec{2, 2, 3, 4, Boundary::free};
    const Lattice lat(spec);
    for (Index v = 0; v < lat.vertex_count(); ++v) {
        const VertexId id = lat.vertex(v);
        CHECK(lat.index_of(id.coords) == v);
        for (int k = 0; k < lat.dims(); ++k) CHECK((id.coords[k] >= 0 && id.coords[k] < lat.side(k)));
    }
    CHECK(lat.vertex(1).coords[0] == 1);  // Z^d coordinates vary fastest
}

TEST_CASE("invalid and oversized specs are rejected") {
    CHECK_THROWS_AS(Lattice(LatticeSpec{0, 1, 4, 4, Boundary::free}), ConfigError);
    CHECK_THROWS_AS(Lattice(LatticeSpec{1, 1, 1, 4, Boundary::free}), ConfigError);
    CHECK_THROWS_AS(Lattice(LatticeSpec{2, 2, 4096, 4096, Boundary::periodic}), CapacityError);
}
