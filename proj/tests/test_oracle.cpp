#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "anisoperc/errors.hpp"
#include "anisoperc/oracle.hpp"

using namespace anisoperc;

namespace {

constexpr auto D = EdgeClass::DEdge;
constexpr auto S = EdgeClass::SEdge;

TinyGraph random_graph(std::mt19937_64& rng) {
    const int n = std::uniform_int_distribution<int>(2, 8)(rng);
    const int m = std::uniform_int_distribution<int>(1, 14)(rng);
    std::uniform_int_distribution<int> vert(0, n - 1);
    std::vector<TinyEdge> edges;
    for (int i = 0; i < m; ++i) edges.push_back({vert(rng), vert(rng), rng() % 2 ? D : S, 0});
    return TinyGraph::hand(n, edges);
}

}  // namespace

TEST_CASE("single edge and parallel edges") {
    const TinyGraph one = TinyGraph::hand(2, {{0, 1, D, 0}});
    for (double p : {0.0, 0.3, 1.0}) {
        const ExactResult r = exact_enumerate(one, {p, 0.7});
        CHECK(r.connected(0, 1) == doctest::Approx(p));
        CHECK(r.connected(1, 1) == 1.0);
        CHECK(r.chi_origin == doctest::Approx(1.0 + p));
        CHECK(exact_by_deletion_contraction(one, {p, 0.7}, TargetEvent::connect(0, 1)) == doctest::Approx(p));
    }
    const TinyGraph dd = TinyGraph::hand(2, {{0, 1, D, 0}, {0, 1, D, 0}});
    const TinyGraph ds = TinyGraph::hand(2, {{0, 1, D, 0}, {0, 1, S, 1}});
    const Params pr{0.3, 0.6};
    CHECK(exact_enumerate(dd, pr).connected(0, 1) == doctest::Approx(1.0 - 0.7 * 0.7));
    CHECK(exact_enumerate(ds, pr).connected(0, 1) == doctest::Approx(1.0 - 0.7 * 0.4));
    CHECK(exact_by_deletion_contraction(ds, pr, TargetEvent::connect(0, 1)) == doctest::Approx(1.0 - 0.7 * 0.4));
}

TEST_CASE("fully open connected graph connects every pair") {
    const ExactResult r = exact_enumerate(TinyGraph::from_lattice({1, 1, 3, 3, Boundary::free}), {1.0, 1.0});
    for (double x : r.connectivity) CHECK(x == 1.0);
    CHECK(r.chi_origin == 9.0);
    CHECK(r.event_probs.at("cross_any") == 1.0);
}

TEST_CASE("2x2 free lattice by hand") {
    const TinyGraph g = TinyGraph::from_lattice({1, 1, 2, 2, Boundary::free});
    CHECK(g.d_edges() == 2);
    CHECK(g.s_edges() == 2);
    const Params pr{0.5, 0.5};
    const ExactResult r = exact_enumerate(g, pr);
    CHECK(r.connected(0, 1) == doctest::Approx(0.5625));
    CHECK(r.connected(0, 2) == doctest::Approx(0.5625));
    CHECK(r.connected(0, 3) == doctest::Approx(0.4375));
    CHECK(r.chi_origin == doctest::Approx(2.5625));
    CHECK(r.chi_mean == doctest::Approx(2.5625));
    // Spanning along D needs one open D-edge, and conversely.
    const Params asym{0.3, 0.6};
    const ExactResult a = exact_enumerate(g, asym);
    CHECK(a.event_probs.at("cross_d") == doctest::Approx(1.0 - 0.7 * 0.7));
    CHECK(a.event_probs.at("cross_s") == doctest::Approx(1.0 - 0.4 * 0.4));
}

TEST_CASE("closed forms on a segment") {
    // q = 0 splits the 6x2 box into two segments of 6 vertices.
    const TinyGraph g = TinyGraph::from_lattice({1, 1, 6, 2, Boundary::free});
    for (double p : {0.2, 0.5, 0.9}) {
        const ExactResult r = exact_enumerate(g, {p, 0.0});
        CHECK(r.connected(0, 5) == doctest::Approx(std::pow(p, 5)));
        double chi0 = 0.0;
        for (int k = 0; k < 6; ++k) chi0 += std::pow(p, k);
        CHECK(r.chi_origin == doctest::Approx(chi0));
        CHECK(r.event_probs.at("cross_s") == 0.0);
    }
}

TEST_CASE("wrap events on tori") {
    const TinyGraph g = TinyGraph::from_lattice({1, 1, 3, 3, Boundary::periodic});
    ExactResult r = exact_enumerate(g, {1.0, 0.0});
    CHECK(r.event_probs.at("cross_d") == 1.0);
    CHECK(r.event_probs.at("cross_s") == 0.0);
    r = exact_enumerate(g, {0.0, 1.0});
    CHECK(r.event_probs.at("cross_s") == 1.0);
    CHECK(r.event_probs.at("cross_d") == 0.0);
    // Ring of three D-edges at q = 0: a line wraps iff all three are open.
    r = exact_enumerate(g, {0.5, 0.0});
    CHECK(r.event_probs.at("cross_d") == doctest::Approx(1.0 - std::pow(1.0 - 0.125, 3)));
    // A side-2 periodic direction has no wrapping edge.
    const ExactResult c = exact_enumerate(TinyGraph::from_lattice({1, 1, 2, 2, Boundary::periodic}), {0.9, 0.9});
    CHECK(c.event_probs.at("cross_any") == 0.0);
}

TEST_CASE("result invariants on the golden lattices") {
    for (const auto& spec : golden_lattices()) {
        const TinyGraph g = TinyGraph::from_lattice(spec);
        for (const auto& pr : golden_params()) {
            const ExactResult r = exact_enumerate(g, pr);
            CAPTURE(golden_name(spec));
            for (double x : r.connectivity) CHECK((x >= 0.0 && x <= 1.0));
            for (int v = 0; v < r.vertices; ++v) {
                CHECK(r.connected(v, v) == 1.0);
                for (int u = 0; u < r.vertices; ++u) CHECK(r.connected(u, v) == r.connected(v, u));
            }
            CHECK(r.chi_origin >= 1.0);
            CHECK(r.chi_origin <= r.vertices);
            CHECK(r.event_probs.at("cross_any") >= r.event_probs.at("cross_d"));
            CHECK(r.event_probs.at("cross_any") <= r.event_probs.at("cross_d") + r.event_probs.at("cross_s") + 1e-12);
        }
    }
}

TEST_CASE("deletion-contraction agrees with enumeration on the golden lattices") {
    for (const auto& spec : golden_lattices()) {
        const TinyGraph g = TinyGraph::from_lattice(spec);
        const ExactPolynomials poly(g);
        for (const auto& pr : golden_params()) {
            CAPTURE(golden_name(spec));
            for (int v = 0; v < g.vertices; ++v)
                CHECK(std::abs(exact_by_deletion_contraction(g, pr, TargetEvent::connect(0, v)) -
                               poly.connected(0, v, pr)) <= 1e-12);
            for (const auto& name : event_names())
                CHECK(std::abs(exact_by_deletion_contraction(g, pr, TargetEvent::named(name)) - poly.event(name, pr)) <=
                      1e-12);
        }
    }
}

TEST_CASE("deletion-contraction agrees with enumeration on 50 random graphs") {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const TinyGraph g = random_graph(rng);
        const Params pr{unit(rng), unit(rng)};
        const ExactResult r = exact_enumerate(g, pr);
        for (int u = 0; u < g.vertices; ++u)
            for (int v = 0; v < g.vertices; ++v)
                CHECK(std::abs(exact_by_deletion_contraction(g, pr, TargetEvent::connect(u, v)) - r.connected(u, v)) <=
                      1e-12);
    }
}

TEST_CASE("exact monotonicity grid") {
    const TinyGraph one = TinyGraph::hand(2, {{0, 1, D, 0}});
    const MonotonicityReport rep = exact_monotonicity_check(one);
    CHECK(rep.monotone);
    CHECK(rep.checks == 40);
    const ExactPolynomials poly(one);
    for (double q : {0.0, 0.5, 1.0}) CHECK(poly.connected(0, 1, {0.5, q}) == doctest::Approx(0.5));
    for (const auto& spec : golden_lattices()) {
        const TinyGraph g = TinyGraph::from_lattice(spec);
        CAPTURE(golden_name(spec));
        CHECK(exact_monotonicity_check(g).monotone);
        const ExactPolynomials pg(g);
        for (int v = 1; v < g.vertices; ++v) CHECK(pg.connected(0, v, {0.0, 0.0}) == 0.0);
    }
}

TEST_CASE("budgets and errors") {
    CHECK_THROWS_AS(TinyGraph::from_lattice({1, 1, 5, 5, Boundary::free}), CapacityError);
    const TinyGraph big = TinyGraph::from_lattice({1, 1, 4, 4, Boundary::free});
    CHECK(big.edges.size() == 24);
    CHECK_THROWS_AS(exact_by_deletion_contraction(big, {0.5, 0.5}, TargetEvent::connect(0, 1)), CapacityError);
    std::vector<TinyEdge> many(25, {0, 1, D, 0});
    CHECK_THROWS_AS(TinyGraph::hand(2, many), CapacityError);
    CHECK_THROWS_AS(TinyGraph::hand(2, {{0, 2, D, 0}}), ConfigError);
    CHECK_THROWS_AS(TargetEvent::named("cross_x"), ConfigError);
    CHECK_THROWS_AS(exact_by_deletion_contraction(TinyGraph::hand(2, {{0, 1, D, 0}}), {0.5, 0.5},
                                                  TargetEvent::named("cross_any")),
                    ConfigError);
}

TEST_CASE("golden suite file matches a fresh computation bit for bit") {
    const std::string path = std::string(ANISOPERC_TEST_DATA_DIR) + "/golden_oracle.jsonl";
    const std::vector<GoldenRecord> stored = read_golden(path);
    CHECK(stored.size() >= 30);
    const std::vector<GoldenRecord> fresh = compute_golden_suite();
    const std::vector<GoldenDiff> diffs = diff_golden(stored, fresh);
    for (const auto& d : diffs) MESSAGE(d.name << " " << d.field << " " << d.expected << " vs " << d.actual);
    CHECK(diffs.empty());

    std::vector<GoldenRecord> tampered = fresh;
    tampered[4].result.chi_mean = std::nextafter(tampered[4].result.chi_mean, 100.0);
    CHECK(diff_golden(stored, tampered).size() == 1);
    tampered.pop_back();
    CHECK(diff_golden(stored, tampered).size() == 2);
}

TEST_CASE("golden records survive a write/read round trip") {
    const std::vector<GoldenRecord> fresh = compute_golden_suite();
    const std::string path = "golden_roundtrip.jsonl";
    write_golden(path, fresh);
    CHECK(diff_golden(fresh, read_golden(path)).empty());
    std::remove(path.c_str());
}
