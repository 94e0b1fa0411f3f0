#include "anisoperc/oracle.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <sstream>
#include <unordered_map>

#include "anisoperc/errors.hpp"
#include "anisoperc/parallel.hpp"

namespace anisoperc {

TinyGraph TinyGraph::from_lattice(const LatticeSpec& spec) {
    const Lattice lattice(spec);
    if (lattice.vertex_count() > kTinyMaxVertices || lattice.edge_count() > kTinyMaxEdges)
        throw CapacityError("tiny graph: lattice exceeds " + std::to_string(kTinyMaxVertices) + " vertices or " +
                            std::to_string(kTinyMaxEdges) + " edges");
    TinyGraph g;
    g.vertices = static_cast<int>(lattice.vertex_count());
    g.spec = spec;
    for (Index e = 0; e < lattice.edge_count(); ++e) {
        const EdgeId id = lattice.edge(e);
        g.edges.push_back({static_cast<int>(id.u), static_cast<int>(id.v), id.cls, id.direction});
    }
    return g;
}

TinyGraph TinyGraph::hand(int vertices, std::vector<TinyEdge> edges) {
    TinyGraph g;
    g.vertices = vertices;
    g.edges = std::move(edges);
    g.validate();
    return g;
}

int TinyGraph::d_edges() const {
    return static_cast<int>(std::count_if(edges.begin(), edges.end(),
                                          [](const TinyEdge& e) { return e.cls == EdgeClass::DEdge; }));
}

int TinyGraph::s_edges() const { return static_cast<int>(edges.size()) - d_edges(); }

void TinyGraph::validate() const {
    if (vertices < 1) throw ConfigError("tiny graph: needs at least one vertex");
    if (vertices > kTinyMaxVertices) throw CapacityError("tiny graph: more than 16 vertices");
    if (static_cast<int>(edges.size()) > kTinyMaxEdges) throw CapacityError("tiny graph: more than 24 edges");
    for (const auto& e : edges)
        if (e.u < 0 || e.v < 0 || e.u >= vertices || e.v >= vertices)
            throw ConfigError("tiny graph: edge endpoint out of range");
}

const std::vector<std::string>& event_names() {
    static const std::vector<std::string> names{"cross_any", "cross_d", "cross_s"};
    return names;
}

namespace {

constexpr int kEvents = 3;

struct Geometry {
    int dims = 0;
    int d = 0;
    bool periodic = false;
    std::vector<std::array<int, kMaxDims>> coord;
    std::array<int, kMaxDims> side{};
};

Geometry geometry_of(const TinyGraph& g) {
    Geometry geo;
    if (!g.spec) return geo;
    const Lattice lattice(*g.spec);
    geo.dims = lattice.dims();
    geo.d = g.spec->d;
    geo.periodic = g.spec->boundary == Boundary::periodic;
    geo.coord.resize(static_cast<std::size_t>(g.vertices));
    for (int k = 0; k < geo.dims; ++k) geo.side[static_cast<std::size_t>(k)] = lattice.side(k);
    for (int v = 0; v < g.vertices; ++v)
        for (int k = 0; k < geo.dims; ++k) geo.coord[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)] = lattice.coord(v, k);
    return geo;
}

// Event bits from a per-direction crossing mask.
unsigned event_bits(const Geometry& geo, std::uint32_t dir_mask) {
    const std::uint32_t dmask = (1u << geo.d) - 1u;
    unsigned bits = 0;
    if (dir_mask) bits |= 1u;
    if (dir_mask & dmask) bits |= 2u;
    if (dir_mask & ~dmask) bits |= 4u;
    return bits;
}

// Span directions of a vertex set on a free lattice.
std::uint32_t span_mask(const Geometry& geo, const std::vector<int>& members) {
    std::uint32_t lo = 0, hi = 0;
    for (int v : members)
        for (int k = 0; k < geo.dims; ++k) {
            const int c = geo.coord[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)];
            if (c == 0) lo |= 1u << k;
            if (c == geo.side[static_cast<std::size_t>(k)] - 1) hi |= 1u << k;
        }
    return lo & hi;
}

struct Incidence {
    int edge;
    int other;
    int dir;
    int sign;
};

}  // namespace

ExactPolynomials::ExactPolynomials(const TinyGraph& g, int workers) : g_(g) {
    g_.validate();
    nd_ = g_.d_edges();
    ns_ = g_.s_edges();
    stride_ = static_cast<std::size_t>((nd_ + 1) * (ns_ + 1));
    const int n = g_.vertices;
    const int m = static_cast<int>(g_.edges.size());
    const std::size_t pairs = static_cast<std::size_t>(n * (n - 1) / 2);
    const Geometry geo = geometry_of(g_);

    std::vector<std::vector<Incidence>> adj(static_cast<std::size_t>(n));
    std::uint32_t dbits = 0;
    for (int e = 0; e < m; ++e) {
        const TinyEdge& te = g_.edges[static_cast<std::size_t>(e)];
        if (te.cls == EdgeClass::DEdge) dbits |= 1u << e;
        adj[static_cast<std::size_t>(te.u)].push_back({e, te.v, te.direction, +1});
        adj[static_cast<std::size_t>(te.v)].push_back({e, te.u, te.direction, -1});
    }

    // Configuration ranges are counted independently and summed in chunk order.
    const std::uint64_t total = 1ull << m;
    const std::uint64_t chunk = std::max<std::uint64_t>(1, total / 64);
    const std::size_t chunks = static_cast<std::size_t>((total + chunk - 1) / chunk);
    std::vector<std::vector<std::uint64_t>> part_pairs(chunks), part_events(chunks);
    parallel_for(chunks, workers, [&](std::size_t c, int) {
        auto& pc = part_pairs[c];
        auto& ec = part_events[c];
        pc.assign(pairs * stride_, 0);
        ec.assign(kEvents * stride_, 0);
        std::vector<int> comp(static_cast<std::size_t>(n));
        std::vector<std::array<int, kMaxDims>> pos(static_cast<std::size_t>(n));
        std::vector<int> queue(static_cast<std::size_t>(n));
        std::vector<std::vector<int>> members;
        const std::uint64_t first = c * chunk;
        const std::uint64_t last = std::min(total, first + chunk);
        for (std::uint64_t cfg = first; cfg < last; ++cfg) {
            const auto mask = static_cast<std::uint32_t>(cfg);
            const int a = std::popcount(mask & dbits);
            const int b = std::popcount(mask & ~dbits);
            const std::size_t cell = static_cast<std::size_t>(a * (ns_ + 1) + b);
            std::fill(comp.begin(), comp.end(), -1);
            members.clear();
            std::uint32_t crossing = 0;
            for (int root = 0; root < n; ++root) {
                if (comp[static_cast<std::size_t>(root)] >= 0) continue;
                const int id = static_cast<int>(members.size());
                members.emplace_back();
                auto& mem = members.back();
                std::uint32_t wraps = 0;
                comp[static_cast<std::size_t>(root)] = id;
                pos[static_cast<std::size_t>(root)].fill(0);
                std::size_t head = 0, tail = 0;
                queue[tail++] = root;
                while (head < tail) {
                    const int x = queue[head++];
                    mem.push_back(x);
                    for (const Incidence& inc : adj[static_cast<std::size_t>(x)]) {
                        if (!(mask >> inc.edge & 1u)) continue;
                        auto expect = pos[static_cast<std::size_t>(x)];
                        if (geo.dims) expect[static_cast<std::size_t>(inc.dir)] += inc.sign;
                        const auto y = static_cast<std::size_t>(inc.other);
                        if (comp[y] < 0) {
                            comp[y] = id;
                            pos[y] = expect;
                            queue[tail++] = inc.other;
                        } else if (geo.dims) {
                            for (int k = 0; k < geo.dims; ++k)
                                if (pos[y][static_cast<std::size_t>(k)] != expect[static_cast<std::size_t>(k)])
                                    wraps |= 1u << k;
                        }
                    }
                }
                if (geo.dims) crossing |= geo.periodic ? wraps : span_mask(geo, mem);
            }
            const unsigned ev = geo.dims ? event_bits(geo, crossing) : 0u;
            for (int k = 0; k < kEvents; ++k)
                if (ev >> k & 1u) ++ec[static_cast<std::size_t>(k) * stride_ + cell];
            for (auto& mem : members) {
                if (mem.size() < 2) continue;
                std::sort(mem.begin(), mem.end());
                for (std::size_t i = 0; i < mem.size(); ++i)
                    for (std::size_t j = i + 1; j < mem.size(); ++j)
                        ++pc[pair_index(mem[i], mem[j]) * stride_ + cell];
            }
        }
    });
    pair_counts_.assign(pairs * stride_, 0);
    event_counts_.assign(kEvents * stride_, 0);
    for (std::size_t c = 0; c < chunks; ++c) {
        for (std::size_t i = 0; i < pair_counts_.size(); ++i) pair_counts_[i] += part_pairs[c][i];
        for (std::size_t i = 0; i < event_counts_.size(); ++i) event_counts_[i] += part_events[c][i];
    }
}

std::size_t ExactPolynomials::pair_index(int u, int v) const {
    if (u > v) std::swap(u, v);
    // Row-major upper triangle without the diagonal.
    const int n = g_.vertices;
    return static_cast<std::size_t>(u * (2 * n - u - 1) / 2 + (v - u - 1));
}

double ExactPolynomials::poly(const std::uint64_t* counts, const Params& params) const {
    params.validate();
    std::vector<double> wd(static_cast<std::size_t>(nd_ + 1)), ws(static_cast<std::size_t>(ns_ + 1));
    for (int a = 0; a <= nd_; ++a) wd[static_cast<std::size_t>(a)] = std::pow(params.p, a) * std::pow(1.0 - params.p, nd_ - a);
    for (int b = 0; b <= ns_; ++b) ws[static_cast<std::size_t>(b)] = std::pow(params.q, b) * std::pow(1.0 - params.q, ns_ - b);
    double sum = 0.0, comp = 0.0;
    for (int a = 0; a <= nd_; ++a)
        for (int b = 0; b <= ns_; ++b) {
            const std::uint64_t c = counts[a * (ns_ + 1) + b];
            if (c == 0) continue;
            const double term = static_cast<double>(c) * wd[static_cast<std::size_t>(a)] * ws[static_cast<std::size_t>(b)];
            const double y = term - comp;
            const double t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
    return std::clamp(sum, 0.0, 1.0);
}

double ExactPolynomials::connected(int u, int v, const Params& params) const {
    if (u == v) return 1.0;
    return poly(pair_counts_.data() + pair_index(u, v) * stride_, params);
}

double ExactPolynomials::event(const std::string& name, const Params& params) const {
    const auto& names = event_names();
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw ConfigError("unknown oracle event '" + name + "'");
    return poly(event_counts_.data() + static_cast<std::size_t>(it - names.begin()) * stride_, params);
}

ExactResult ExactPolynomials::evaluate(const Params& params) const {
    ExactResult r;
    const int n = g_.vertices;
    r.vertices = n;
    r.connectivity.assign(static_cast<std::size_t>(n * n), 0.0);
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) r.connectivity[static_cast<std::size_t>(u * n + v)] = connected(u, v, params);
    double total = 0.0;
    for (int v = 0; v < n; ++v) r.chi_origin += r.connected(0, v);
    for (double x : r.connectivity) total += x;
    r.chi_mean = total / n;
    if (g_.spec)
        for (const auto& name : event_names()) r.event_probs[name] = event(name, params);
    return r;
}

ExactResult exact_enumerate(const TinyGraph& g, const Params& params) {
    return ExactPolynomials(g).evaluate(params);
}

TargetEvent TargetEvent::named(const std::string& name) {
    if (name == "cross_any") return {Kind::cross_any, 0, 0};
    if (name == "cross_d") return {Kind::cross_d, 0, 0};
    if (name == "cross_s") return {Kind::cross_s, 0, 0};
    throw ConfigError("unknown oracle event '" + name + "'");
}

namespace {

// Vertex partition with lifted positions relative to each block's first vertex
// and per-block wrap directions.
struct DcState {
    std::vector<std::int8_t> label;
    std::vector<std::int8_t> pos;  // vertices x dims
    std::vector<std::uint8_t> wraps;  // per block

    void canonicalize(int dims) {
        const std::size_t n = label.size();
        std::array<std::int8_t, kTinyMaxVertices> remap;
        remap.fill(-1);
        std::array<int, kTinyMaxVertices> rep{};
        std::vector<std::uint8_t> w;
        std::int8_t next = 0;
        for (std::size_t v = 0; v < n; ++v) {
            const auto old = static_cast<std::size_t>(label[v]);
            if (remap[old] < 0) {
                remap[old] = next++;
                rep[static_cast<std::size_t>(remap[old])] = static_cast<int>(v);
                w.push_back(wraps[old]);
            }
        }
        std::vector<std::int8_t> shifted(pos.size());
        for (std::size_t v = 0; v < n; ++v) {
            label[v] = remap[static_cast<std::size_t>(label[v])];
            const auto r = static_cast<std::size_t>(rep[static_cast<std::size_t>(label[v])]);
            for (int k = 0; k < dims; ++k)
                shifted[v * dims + k] = static_cast<std::int8_t>(pos[v * dims + k] - pos[r * dims + k]);
        }
        pos = std::move(shifted);
        wraps = std::move(w);
    }

    std::string key() const {
        std::string k(label.begin(), label.end());
        k.append(pos.begin(), pos.end());
        k.append(wraps.begin(), wraps.end());
        return k;
    }
};

class DeletionContraction {
public:
    DeletionContraction(const TinyGraph& g, const Params& params, const TargetEvent& target)
        : g_(g), params_(params), target_(target), geo_(geometry_of(g)), memo_(g.edges.size() + 1) {}

    double run() {
        DcState s;
        const auto n = static_cast<std::size_t>(g_.vertices);
        s.label.resize(n);
        for (std::size_t v = 0; v < n; ++v) s.label[v] = static_cast<std::int8_t>(v);
        s.pos.assign(n * static_cast<std::size_t>(geo_.dims), 0);
        s.wraps.assign(n, 0);
        return solve(0, s);
    }

private:
    double solve(std::size_t i, const DcState& s) {
        if (i == g_.edges.size()) return terminal(s);
        const std::string key = s.key();
        auto& level = memo_[i];
        if (const auto it = level.find(key); it != level.end()) return it->second;
        const TinyEdge& e = g_.edges[i];
        const double mu = e.cls == EdgeClass::DEdge ? params_.p : params_.q;
        double value = 0.0;
        if (mu > 0.0) value += mu * solve(i + 1, contract(s, e));
        if (mu < 1.0) value += (1.0 - mu) * solve(i + 1, s);
        level.emplace(key, value);
        return value;
    }

    DcState contract(const DcState& s, const TinyEdge& e) const {
        DcState t = s;
        const int dims = geo_.dims;
        const auto u = static_cast<std::size_t>(e.u), v = static_cast<std::size_t>(e.v);
        std::array<int, kMaxDims> delta{};
        for (int k = 0; k < dims; ++k)
            delta[static_cast<std::size_t>(k)] = t.pos[u * dims + k] + (k == e.direction ? 1 : 0) - t.pos[v * dims + k];
        const auto lu = static_cast<std::size_t>(t.label[u]), lv = static_cast<std::size_t>(t.label[v]);
        if (lu == lv) {
            for (int k = 0; k < dims; ++k)
                if (delta[static_cast<std::size_t>(k)] != 0) t.wraps[lu] |= static_cast<std::uint8_t>(1u << k);
        } else {
            for (std::size_t w = 0; w < t.label.size(); ++w) {
                if (static_cast<std::size_t>(t.label[w]) != lv) continue;
                t.label[w] = static_cast<std::int8_t>(lu);
                for (int k = 0; k < dims; ++k)
                    t.pos[w * dims + k] = static_cast<std::int8_t>(t.pos[w * dims + k] + delta[static_cast<std::size_t>(k)]);
            }
            t.wraps[lu] |= t.wraps[lv];
            t.wraps[lv] = 0;
        }
        t.canonicalize(dims);
        return t;
    }

    double terminal(const DcState& s) const {
        if (target_.kind == TargetEvent::Kind::connect)
            return s.label[static_cast<std::size_t>(target_.u)] == s.label[static_cast<std::size_t>(target_.v)] ? 1.0 : 0.0;
        std::uint32_t crossing = 0;
        if (geo_.periodic) {
            for (auto w : s.wraps) crossing |= w;
        } else {
            std::vector<std::vector<int>> blocks(s.wraps.size());
            for (std::size_t v = 0; v < s.label.size(); ++v)
                blocks[static_cast<std::size_t>(s.label[v])].push_back(static_cast<int>(v));
            for (const auto& b : blocks) crossing |= span_mask(geo_, b);
        }
        const unsigned ev = event_bits(geo_, crossing);
        switch (target_.kind) {
            case TargetEvent::Kind::cross_any: return ev & 1u ? 1.0 : 0.0;
            case TargetEvent::Kind::cross_d: return ev & 2u ? 1.0 : 0.0;
            default: return ev & 4u ? 1.0 : 0.0;
        }
    }

    const TinyGraph& g_;
    Params params_;
    TargetEvent target_;
    Geometry geo_;
    std::vector<std::unordered_map<std::string, double>> memo_;
};

}  // namespace

double exact_by_deletion_contraction(const TinyGraph& g, const Params& params, const TargetEvent& target) {
    g.validate();
    params.validate();
    if (static_cast<int>(g.edges.size()) > kDeletionContractionMaxEdges)
        throw CapacityError("deletion-contraction: more than 20 edges");
    if (target.kind == TargetEvent::Kind::connect) {
        if (target.u < 0 || target.v < 0 || target.u >= g.vertices || target.v >= g.vertices)
            throw ConfigError("deletion-contraction: target vertex out of range");
    } else if (!g.spec) {
        throw ConfigError("deletion-contraction: crossing events need a lattice-derived graph");
    }
    return DeletionContraction(g, params, target).run();
}

MonotonicityReport exact_monotonicity_check(const TinyGraph& g) {
    const ExactPolynomials poly(g);
    constexpr std::array<double, 5> grid{0.0, 0.25, 0.5, 0.75, 1.0};
    MonotonicityReport rep;
    std::vector<std::function<double(const Params&)>> observables;
    for (int v = 1; v < g.vertices; ++v)
        observables.push_back([&poly, v](const Params& pr) { return poly.connected(0, v, pr); });
    if (g.spec)
        for (const auto& name : event_names())
            observables.push_back([&poly, name](const Params& pr) { return poly.event(name, pr); });
    auto check = [&](double before, double after) {
        ++rep.checks;
        if (after < before - 1e-12) {
            ++rep.violations;
            rep.monotone = false;
            rep.worst_drop = std::max(rep.worst_drop, before - after);
        }
    };
    for (const auto& f : observables) {
        std::array<std::array<double, 5>, 5> table{};
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j) table[i][j] = f({grid[i], grid[j]});
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j) {
                if (i + 1 < 5) check(table[i][j], table[i + 1][j]);
                if (j + 1 < 5) check(table[i][j], table[i][j + 1]);
            }
    }
    return rep;
}

std::vector<LatticeSpec> golden_lattices() {
    const auto F = Boundary::free;
    const auto P = Boundary::periodic;
    return {
        {1, 1, 2, 2, F}, {1, 1, 2, 2, P}, {1, 1, 3, 3, F}, {1, 1, 3, 3, P}, {1, 1, 4, 3, F}, {1, 1, 5, 2, F},
        {1, 1, 4, 2, P}, {1, 1, 2, 4, P}, {1, 1, 2, 3, P}, {1, 2, 2, 2, F}, {2, 1, 2, 2, F}, {2, 1, 2, 3, F},
    };
}

std::vector<Params> golden_params() { return {{0.3, 0.6}, {0.5, 0.5}, {0.7, 0.2}}; }

std::string golden_name(const LatticeSpec& spec) {
    std::ostringstream os;
    os << "d" << spec.d << "s" << spec.s << "_" << spec.side_d << "x" << spec.side_s << "_" << to_string(spec.boundary);
    return os.str();
}

std::vector<GoldenRecord> compute_golden_suite(int workers) {
    std::vector<GoldenRecord> out;
    for (const auto& spec : golden_lattices()) {
        const ExactPolynomials poly(TinyGraph::from_lattice(spec), workers);
        for (const auto& pr : golden_params()) out.push_back({golden_name(spec), spec, pr, poly.evaluate(pr)});
    }
    return out;
}

namespace {

nlohmann::json to_json(const GoldenRecord& r) {
    nlohmann::json j;
    j["schema"] = kGoldenSchema;
    j["name"] = r.name;
    j["lattice"] = {{"d", r.spec.d},
                    {"s", r.spec.s},
                    {"side_d", r.spec.side_d},
                    {"side_s", r.spec.side_s},
                    {"boundary", to_string(r.spec.boundary)}};
    j["p"] = r.params.p;
    j["q"] = r.params.q;
    j["vertices"] = r.result.vertices;
    j["chi_origin"] = r.result.chi_origin;
    j["chi_mean"] = r.result.chi_mean;
    j["events"] = r.result.event_probs;
    j["connectivity"] = r.result.connectivity;
    return j;
}

GoldenRecord from_json(const nlohmann::json& j) {
    if (j.value("schema", "") != kGoldenSchema) throw ConfigError("golden: unexpected schema");
    GoldenRecord r;
    r.name = j.at("name").get<std::string>();
    const auto& l = j.at("lattice");
    r.spec = {l.at("d").get<int>(), l.at("s").get<int>(), l.at("side_d").get<int>(), l.at("side_s").get<int>(),
              boundary_from_string(l.at("boundary").get<std::string>())};
    r.params = {j.at("p").get<double>(), j.at("q").get<double>()};
    r.result.vertices = j.at("vertices").get<int>();
    r.result.chi_origin = j.at("chi_origin").get<double>();
    r.result.chi_mean = j.at("chi_mean").get<double>();
    r.result.event_probs = j.at("events").get<std::map<std::string, double>>();
    r.result.connectivity = j.at("connectivity").get<std::vector<double>>();
    return r;
}

}  // namespace

void write_golden(const std::string& path, const std::vector<GoldenRecord>& records) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("golden: cannot write " + tmp);
        for (const auto& r : records) out << to_json(r).dump() << '\n';
        if (!out) throw ConfigError("golden: write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw ConfigError("golden: cannot rename onto " + path);
}

std::vector<GoldenRecord> read_golden(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("golden: cannot open " + path);
    std::vector<GoldenRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("golden: bad record in " + path + ": " + e.what());
        }
    }
    return out;
}

std::vector<GoldenDiff> diff_golden(const std::vector<GoldenRecord>& expected,
                                    const std::vector<GoldenRecord>& actual) {
    std::vector<GoldenDiff> diffs;
    auto label = [](const GoldenRecord& r) {
        std::ostringstream os;
        os << r.name << "@(" << r.params.p << "," << r.params.q << ")";
        return os.str();
    };
    for (const auto& e : expected) {
        const auto it = std::find_if(actual.begin(), actual.end(), [&](const GoldenRecord& a) {
            return a.name == e.name && a.params.p == e.params.p && a.params.q == e.params.q;
        });
        if (it == actual.end()) {
            diffs.push_back({label(e), "missing", 0.0, 0.0});
            continue;
        }
        auto cmp = [&](const std::string& field, double x, double y) {
            if (x != y) diffs.push_back({label(e), field, x, y});
        };
        cmp("chi_origin", e.result.chi_origin, it->result.chi_origin);
        cmp("chi_mean", e.result.chi_mean, it->result.chi_mean);
        for (const auto& [name, value] : e.result.event_probs) {
            const auto ev = it->result.event_probs.find(name);
            cmp("events." + name, value, ev == it->result.event_probs.end() ? std::nan("") : ev->second);
        }
        if (e.result.connectivity.size() != it->result.connectivity.size()) {
            diffs.push_back({label(e), "connectivity.size", static_cast<double>(e.result.connectivity.size()),
                             static_cast<double>(it->result.connectivity.size())});
        } else {
            for (std::size_t i = 0; i < e.result.connectivity.size(); ++i)
                cmp("connectivity[" + std::to_string(i) + "]", e.result.connectivity[i], it->result.connectivity[i]);
        }
    }
    for (const auto& a : actual) {
        const bool known = std::any_of(expected.begin(), expected.end(), [&](const GoldenRecord& e) {
            return a.name == e.name && a.params.p == e.params.p && a.params.q == e.params.q;
        });
        if (!known) diffs.push_back({label(a), "unexpected", 0.0, 0.0});
    }
    return diffs;
}

}  // namespace anisoperc
