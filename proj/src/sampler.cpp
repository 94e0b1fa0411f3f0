#include "anisoperc/sampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "anisoperc/cluster_forest.hpp"
#include "anisoperc/errors.hpp"
#include "anisoperc/kernels.hpp"
#include "anisoperc/parallel.hpp"
#include "anisoperc/rng.hpp"

namespace anisoperc {

namespace {

using u128 = unsigned __int128;

void check_probability(double x, const char* name) {
    if (!(x >= 0.0 && x <= 1.0)) throw ConfigError(std::string("params: ") + name + " must lie in [0,1]");
}

// Calls fn(e) for every set bit e in [first, last).
template <typename Fn>
void for_each_set_bit(const std::vector<std::uint64_t>& bits, Index first, Index last, Fn&& fn) {
    if (first >= last) return;
    const auto w_first = static_cast<std::size_t>(first / 64);
    const auto w_last = static_cast<std::size_t>((last - 1) / 64);
    for (std::size_t w = w_first; w <= w_last; ++w) {
        std::uint64_t word = bits[w];
        if (w == w_first) word &= ~std::uint64_t{0} << (first % 64);
        if (w == w_last && last % 64 != 0) word &= ~std::uint64_t{0} >> (64 - last % 64);
        while (word != 0) {
            fn(static_cast<Index>(w * 64 + static_cast<std::size_t>(std::countr_zero(word))));
            word &= word - 1;
        }
    }
}

void add_open_edges(const Lattice& lattice, const std::vector<std::uint64_t>& bits, int dir_first, int dir_last,
                    ClusterForest& forest) {
    for (int k = dir_first; k < dir_last; ++k) {
        const Index offset = lattice.block_offset(k);
        for_each_set_bit(bits, offset, offset + lattice.block_size(k), [&](Index e) {
            const Index u = lattice.edge_base(k, e - offset);
            forest.add_edge(k, u, lattice.neighbor(k, u));
        });
    }
}

std::vector<std::uint32_t> fill_labels(std::uint64_t seed, std::uint32_t replicate, Index count) {
    const auto blocks = static_cast<std::size_t>((count + 3) / 4);
    std::vector<std::uint32_t> labels(4 * blocks);
    kernels::active().philox_fill(key_from_seed(seed), 0, replicate,
                                  static_cast<std::uint32_t>(StreamPurpose::edge_labels), blocks, labels.data());
    labels.resize(static_cast<std::size_t>(count));
    return labels;
}

long double to_ld(u128 x) {
    return static_cast<long double>(static_cast<std::uint64_t>(x >> 64)) * 0x1.0p64L +
           static_cast<long double>(static_cast<std::uint64_t>(x));
}

void mean_and_se(long double s1, long double s2, int n, double scale, double& mean, double& se) {
    const long double m = s1 / n;
    mean = static_cast<double>(m / scale);
    if (n < 2) {
        se = 0.0;
        return;
    }
    long double var = (s2 - s1 * s1 / n) / (n - 1);
    if (var < 0) var = 0;
    se = static_cast<double>(std::sqrt(var / n) / scale);
}

}  // namespace

void Params::validate() const {
    check_probability(p, "p");
    check_probability(q, "q");
}

void BondConfig::set_open(Index e, bool open) {
    const std::uint64_t bit = std::uint64_t{1} << (e % 64);
    auto& word = open_bits_[static_cast<std::size_t>(e) / 64];
    word = open ? (word | bit) : (word & ~bit);
}

Index BondConfig::count_open(Index first, Index last) const {
    Index count = 0;
    for_each_set_bit(open_bits_, first, last, [&](Index) { ++count; });
    return count;
}

CoupledLabels::CoupledLabels(const LatticeSpec& spec, std::uint64_t seed, std::uint32_t replicate)
    : spec_(spec), seed_(seed) {
    const Lattice lattice(spec);
    d_edges_ = lattice.d_edge_count();
    labels_ = fill_labels(seed, replicate, lattice.edge_count());
}

BondConfig CoupledLabels::threshold(const Params& params) const {
    params.validate();
    const auto n = labels_.size();
    std::vector<std::uint64_t> bits((n + 63) / 64);
    kernels::active().threshold_bits(labels_.data(), n, static_cast<std::size_t>(d_edges_),
                                     probability_threshold(params.p), probability_threshold(params.q), bits.data());
    return BondConfig(spec_, params, seed_, static_cast<Index>(n), std::move(bits));
}

CoupledLabels sample_config_coupled(const LatticeSpec& spec, std::uint64_t seed, std::uint32_t replicate) {
    return CoupledLabels(spec, seed, replicate);
}

BondConfig sample_config(const LatticeSpec& spec, const Params& params, std::uint64_t seed,
                         std::uint32_t replicate) {
    params.validate();
    return CoupledLabels(spec, seed, replicate).threshold(params);
}

bool ClusterStats::crossed() const {
    return std::any_of(wraps.begin(), wraps.end(), [](bool b) { return b; }) ||
           std::any_of(spans.begin(), spans.end(), [](bool b) { return b; });
}

double ClusterStats::mean_cluster_size(bool exclude_largest) const {
    std::uint64_t sq = sum_squares;
    if (exclude_largest) sq -= static_cast<std::uint64_t>(largest) * static_cast<std::uint64_t>(largest);
    return static_cast<double>(sq) / static_cast<double>(vertex_count);
}

ClusterStats cluster_stats(const BondConfig& config) {
    const Lattice lattice(config.spec());
    ClusterForest forest(lattice);
    add_open_edges(lattice, config.open_bits(), 0, lattice.dims(), forest);
    ClusterStats stats;
    stats.vertex_count = lattice.vertex_count();
    stats.cluster_sizes = forest.cluster_sizes();
    stats.largest = forest.largest();
    stats.origin_cluster_size = forest.cluster_size(0);
    stats.sum_squares = forest.sum_squares();
    std::vector<bool> flags(static_cast<std::size_t>(lattice.dims()));
    for (int k = 0; k < lattice.dims(); ++k) flags[static_cast<std::size_t>(k)] = (forest.crossing_mask() >> k) & 1u;
    if (config.spec().boundary == Boundary::periodic) stats.wraps = std::move(flags);
    else stats.spans = std::move(flags);
    return stats;
}

std::uint32_t axes_mask(const LatticeSpec& spec, CrossingAxes axes) {
    const std::uint32_t d_mask = (1u << spec.d) - 1u;
    const std::uint32_t all = (1u << spec.dims()) - 1u;
    switch (axes) {
        case CrossingAxes::d_only: return d_mask;
        case CrossingAxes::s_only: return all & ~d_mask;
        case CrossingAxes::any: break;
    }
    return all;
}

Index SweepCurve::first_crossing_for(std::size_t replicate, std::uint32_t mask) const {
    Index best = kNever;
    const auto& row = first_crossing[replicate];
    for (std::size_t k = 0; k < row.size(); ++k) {
        if ((mask >> k) & 1u) best = std::min(best, row[k]);
    }
    return best;
}

std::vector<double> SweepCurve::crossing_freq_for(std::uint32_t mask) const {
    std::vector<double> hist(static_cast<std::size_t>(m_max + 1), 0.0);
    for (std::size_t r = 0; r < first_crossing.size(); ++r) {
        const Index m = first_crossing_for(r, mask);
        if (m <= m_max) hist[static_cast<std::size_t>(m)] += 1.0;
    }
    double running = 0.0;
    for (auto& h : hist) {
        running += h;
        h = running / replicates;
    }
    return hist;
}

SweepCurve sweep_q(const LatticeSpec& spec, double p, int replicates, std::uint64_t seed,
                   const SweepOptions& options) {
    check_probability(p, "p");
    if (replicates < 1) throw ConfigError("sweep: replicates must be >= 1");
    const Lattice lattice(spec);
    const Index n = lattice.vertex_count();
    const Index d_edges = lattice.d_edge_count();
    const Index total_s = lattice.s_edge_count();
    const Index m_max = options.max_open_s < 0 ? total_s : std::min(options.max_open_s, total_s);
    const auto len = static_cast<std::size_t>(m_max + 1);
    const std::uint64_t thr_p = probability_threshold(p);
    const int dims = lattice.dims();

    struct Worker {
        std::vector<std::uint64_t> largest;
        std::vector<u128> largest2, chi, chi2;
        std::unique_ptr<ClusterForest> forest;
        std::vector<std::uint32_t> order;
        std::vector<std::uint64_t> bits;
    };
    const int n_workers = std::min(resolve_workers(options.workers), replicates);
    std::vector<Worker> workers(static_cast<std::size_t>(n_workers));

    SweepCurve curve;
    curve.spec = spec;
    curve.p = p;
    curve.replicates = replicates;
    curve.seed = seed;
    curve.vertex_count = n;
    curve.total_s = total_s;
    curve.m_max = m_max;
    curve.first_crossing.assign(static_cast<std::size_t>(replicates),
                                std::vector<Index>(static_cast<std::size_t>(dims), SweepCurve::kNever));

    parallel_for(static_cast<std::size_t>(replicates), n_workers, [&](std::size_t r, int w) {
        Worker& wk = workers[static_cast<std::size_t>(w)];
        if (!wk.forest) {
            wk.forest = std::make_unique<ClusterForest>(lattice);
            wk.largest.assign(len, 0);
            wk.largest2.assign(len, 0);
            wk.chi.assign(len, 0);
            wk.chi2.assign(len, 0);
            wk.order.resize(static_cast<std::size_t>(total_s));
        } else {
            wk.forest->reset();
        }
        ClusterForest& forest = *wk.forest;
        const auto rep = static_cast<std::uint32_t>(r);
        auto& first = curve.first_crossing[r];

        const std::vector<std::uint32_t> labels = fill_labels(seed, rep, d_edges);
        wk.bits.assign(static_cast<std::size_t>((d_edges + 63) / 64), 0);
        if (d_edges > 0)
            kernels::active().threshold_bits(labels.data(), labels.size(), labels.size(), thr_p, 0, wk.bits.data());
        add_open_edges(lattice, wk.bits, 0, spec.d, forest);

        auto record = [&](Index m) {
            const std::uint32_t mask = forest.crossing_mask();
            const auto i = static_cast<std::size_t>(m);
            const auto big = static_cast<std::uint64_t>(forest.largest());
            std::uint64_t sq = forest.sum_squares();
            if (mask != 0) sq -= big * big;
            wk.largest[i] += big;
            wk.largest2[i] += u128{big} * big;
            wk.chi[i] += sq;
            wk.chi2[i] += u128{sq} * sq;
        };
        auto note_crossing = [&](std::uint32_t fresh, Index m) {
            while (fresh != 0) {
                first[static_cast<std::size_t>(std::countr_zero(fresh))] = m;
                fresh &= fresh - 1;
            }
        };
        note_crossing(forest.crossing_mask(), 0);
        record(0);

        std::iota(wk.order.begin(), wk.order.end(), 0u);
        PhiloxStream stream(seed, rep, StreamPurpose::insertion_order);
        for (Index i = 0; i < m_max; ++i) {
            const auto remaining = static_cast<std::uint32_t>(total_s - i);
            const auto j = static_cast<std::size_t>(i) + stream.bounded(remaining);
            std::swap(wk.order[static_cast<std::size_t>(i)], wk.order[j]);
            const Index e = d_edges + wk.order[static_cast<std::size_t>(i)];
            int k = spec.d;
            while (e >= lattice.block_offset(k + 1)) ++k;
            const Index u = lattice.edge_base(k, e - lattice.block_offset(k));
            note_crossing(forest.add_edge(k, u, lattice.neighbor(k, u)), i + 1);
            record(i + 1);
        }
    });

    std::vector<u128> largest(len, 0), largest2(len, 0), chi(len, 0), chi2(len, 0);
    for (const auto& wk : workers) {
        if (!wk.forest) continue;
        for (std::size_t i = 0; i < len; ++i) {
            largest[i] += wk.largest[i];
            largest2[i] += wk.largest2[i];
            chi[i] += wk.chi[i];
            chi2[i] += wk.chi2[i];
        }
    }
    curve.mean_cluster_size.resize(len);
    curve.mean_cluster_size_se.resize(len);
    curve.largest_frac.resize(len);
    curve.largest_frac_se.resize(len);
    const auto nd = static_cast<double>(n);
    for (std::size_t i = 0; i < len; ++i) {
        mean_and_se(to_ld(chi[i]), to_ld(chi2[i]), replicates, nd, curve.mean_cluster_size[i],
                    curve.mean_cluster_size_se[i]);
        mean_and_se(to_ld(largest[i]), to_ld(largest2[i]), replicates, nd, curve.largest_frac[i],
                    curve.largest_frac_se[i]);
    }
    curve.crossing_freq = curve.crossing_freq_for(axes_mask(spec, CrossingAxes::any));
    return curve;
}

BinomialWindow binomial_window(Index n, double q) {
    if (n < 0) throw DomainError("binomial_window: n must be >= 0");
    check_probability(q, "q");
    BinomialWindow win;
    if (q <= 0.0 || n == 0) {
        win.first = 0;
        win.weights = {1.0};
        return win;
    }
    if (q >= 1.0) {
        win.first = n;
        win.weights = {1.0};
        return win;
    }
    const double log_odds = std::log(q) - std::log1p(-q);
    const Index mode = std::clamp<Index>(static_cast<Index>(std::floor((static_cast<double>(n) + 1.0) * q)), 0, n);
    constexpr double kCut = -69.0;  // e^-69 ~ 1e-30 relative to the mode
    std::vector<double> up{0.0}, down;
    for (Index m = mode; m < n; ++m) {
        const double next = up.back() + std::log(static_cast<double>(n - m)) - std::log(static_cast<double>(m + 1)) +
                            log_odds;
        if (next < kCut) break;
        up.push_back(next);
    }
    double cur = 0.0;
    for (Index m = mode; m > 0; --m) {
        cur += std::log(static_cast<double>(m)) - std::log(static_cast<double>(n - m + 1)) - log_odds;
        if (cur < kCut) break;
        down.push_back(cur);
    }
    win.first = mode - static_cast<Index>(down.size());
    win.weights.reserve(down.size() + up.size());
    for (auto it = down.rbegin(); it != down.rend(); ++it) win.weights.push_back(std::exp(*it));
    for (double lw : up) win.weights.push_back(std::exp(lw));
    double sum = 0.0, comp = 0.0;
    for (double w : win.weights) {
        const double y = w - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    for (double& w : win.weights) w /= sum;
    return win;
}

namespace {

// Restricts the window to m <= m_max; the dropped mass must be negligible.
BinomialWindow window_for(const SweepCurve& curve, double q) {
    BinomialWindow win = binomial_window(curve.total_s, q);
    if (win.last() > curve.m_max) {
        double dropped = 0.0;
        const Index keep = std::max<Index>(curve.m_max - win.first + 1, 0);
        for (auto i = static_cast<std::size_t>(keep); i < win.weights.size(); ++i) dropped += win.weights[i];
        if (dropped > 1e-12)
            throw DomainError("convolve_canonical: q=" + std::to_string(q) + " needs m beyond the truncated sweep (" +
                              std::to_string(curve.m_max) + ")");
        win.weights.resize(static_cast<std::size_t>(keep));
    }
    return win;
}

// tail[j] = P(Bin >= first + j) inside the window.
std::vector<double> upper_tail(const BinomialWindow& win) {
    std::vector<double> tail(win.weights.size());
    double acc = 0.0;
    for (std::size_t i = win.weights.size(); i-- > 0;) {
        acc += win.weights[i];
        tail[i] = std::min(acc, 1.0);
    }
    return tail;
}

double tail_at(const BinomialWindow& win, const std::vector<double>& tail, Index m) {
    if (m <= win.first) return 1.0;
    if (m > win.last()) return 0.0;
    return tail[static_cast<std::size_t>(m - win.first)];
}

}  // namespace

CanonicalPoint convolve_canonical(const SweepCurve& curve, double q, CrossingAxes axes) {
    const BinomialWindow win = window_for(curve, q);
    CanonicalPoint pt;
    pt.q = q;
    if (win.weights.empty()) return pt;
    const auto off = static_cast<std::size_t>(win.first);
    const auto count = win.weights.size();
    const auto& k = kernels::active();
    pt.mean_cluster_size = k.dot(win.weights.data(), curve.mean_cluster_size.data() + off, count);
    pt.largest_frac = k.dot(win.weights.data(), curve.largest_frac.data() + off, count);
    double v1 = 0.0, v2 = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double s1 = curve.mean_cluster_size_se[off + i];
        const double s2 = curve.largest_frac_se[off + i];
        v1 += win.weights[i] * s1 * s1;
        v2 += win.weights[i] * s2 * s2;
    }
    pt.mean_cluster_size_se = std::sqrt(v1);
    pt.largest_frac_se = std::sqrt(v2);

    const std::uint32_t mask = axes_mask(curve.spec, axes);
    const std::vector<double> tail = upper_tail(win);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t r = 0; r < curve.first_crossing.size(); ++r) {
        const double x = tail_at(win, tail, curve.first_crossing_for(r, mask));
        s1 += x;
        s2 += x * x;
    }
    const int nr = curve.replicates;
    pt.crossing = s1 / nr;
    if (nr > 1) {
        const double var = std::max(0.0, (s2 - s1 * s1 / nr) / (nr - 1));
        pt.crossing_se = std::sqrt(var / nr);
    }
    return pt;
}

std::vector<double> replicate_crossing_matrix(const SweepCurve& curve, const std::vector<double>& q_grid,
                                              CrossingAxes axes) {
    const std::uint32_t mask = axes_mask(curve.spec, axes);
    const std::size_t g = q_grid.size();
    std::vector<Index> firsts(curve.first_crossing.size());
    for (std::size_t r = 0; r < firsts.size(); ++r) firsts[r] = curve.first_crossing_for(r, mask);
    std::vector<double> out(firsts.size() * g);
    for (std::size_t j = 0; j < g; ++j) {
        const BinomialWindow win = window_for(curve, q_grid[j]);
        const std::vector<double> tail = upper_tail(win);
        for (std::size_t r = 0; r < firsts.size(); ++r) out[r * g + j] = tail_at(win, tail, firsts[r]);
    }
    return out;
}

std::vector<double> first_event_matrix(Index total, const std::vector<Index>& firsts,
                                       const std::vector<double>& q_grid) {
    const std::size_t g = q_grid.size();
    std::vector<double> out(firsts.size() * g);
    for (std::size_t j = 0; j < g; ++j) {
        const BinomialWindow win = binomial_window(total, q_grid[j]);
        const std::vector<double> tail = upper_tail(win);
        for (std::size_t r = 0; r < firsts.size(); ++r) out[r * g + j] = tail_at(win, tail, firsts[r]);
    }
    return out;
}

std::vector<bool> good_vertices(const BondConfig& config, double min_run) {
    const LatticeSpec& spec = config.spec();
    if (spec.d != 1) throw ConfigError("good_vertices: requires d = 1");
    const Lattice lattice(spec);
    const Index lines = lattice.vertex_count() / spec.side_d;
    const int len = spec.side_d;
    std::vector<bool> good(static_cast<std::size_t>(lines));
    auto wrap = [len](int x) { return ((x % len) + len) % len; };
    auto open_d = [&](Index t, int x) {
        const Index rank = lattice.edge_rank(0, t * len + wrap(x));
        return rank >= 0 && config.is_open(rank);
    };
    for (Index t = 0; t < lines; ++t) {
        // Run of (0, t) inside its line, as [left, right] in unwrapped coordinates.
        int right = 0;
        while (right + 1 < len && open_d(t, right)) ++right;
        int left = 0;
        while (right - left + 1 < len && open_d(t, left - 1)) --left;
        bool ok = static_cast<double>(right - left + 1) > min_run;
        for (int k = 1; ok && k < lattice.dims(); ++k) {
            bool exit = false;
            for (int x = left; x <= right && !exit; ++x) {
                const Index rank = lattice.edge_rank(k, t * len + wrap(x));
                exit = rank >= 0 && config.is_open(lattice.block_offset(k) + rank);
            }
            ok = exit;
        }
        good[static_cast<std::size_t>(t)] = ok;
    }
    return good;
}

std::vector<Index> site_first_wrap(int s, int side, int replicates, std::uint64_t seed, int workers) {
    if (s < 2) throw ConfigError("site_first_wrap: s must be >= 2");
    if (side < 3) throw ConfigError("site_first_wrap: side must be >= 3");
    const LatticeSpec spec{1, s - 1, side, side, Boundary::periodic};
    const Lattice lattice(spec);
    const Index n = lattice.vertex_count();
    std::vector<Index> result(static_cast<std::size_t>(replicates), n);
    const int n_workers = std::min(resolve_workers(workers), replicates);
    struct Worker {
        std::unique_ptr<ClusterForest> forest;
        std::vector<std::uint32_t> order;
        std::vector<std::uint8_t> open;
    };
    std::vector<Worker> pool(static_cast<std::size_t>(n_workers));
    parallel_for(static_cast<std::size_t>(replicates), n_workers, [&](std::size_t r, int w) {
        Worker& wk = pool[static_cast<std::size_t>(w)];
        if (!wk.forest) wk.forest = std::make_unique<ClusterForest>(lattice);
        else wk.forest->reset();
        wk.order.resize(static_cast<std::size_t>(n));
        std::iota(wk.order.begin(), wk.order.end(), 0u);
        wk.open.assign(static_cast<std::size_t>(n), 0);
        PhiloxStream stream(seed, static_cast<std::uint32_t>(r), StreamPurpose::site_order);
        for (Index i = 0; i < n; ++i) {
            const auto j = static_cast<std::size_t>(i) + stream.bounded(static_cast<std::uint32_t>(n - i));
            std::swap(wk.order[static_cast<std::size_t>(i)], wk.order[j]);
            const Index x = wk.order[static_cast<std::size_t>(i)];
            wk.open[static_cast<std::size_t>(x)] = 1;
            std::uint32_t fresh = 0;
            for (int k = 0; k < lattice.dims(); ++k) {
                const Index up = lattice.neighbor(k, x);
                if (wk.open[static_cast<std::size_t>(up)]) fresh |= wk.forest->add_edge(k, x, up);
                const int c = lattice.coord(x, k);
                const Index down = c == 0 ? x + lattice.stride(k) * (side - 1) : x - lattice.stride(k);
                if (wk.open[static_cast<std::size_t>(down)]) fresh |= wk.forest->add_edge(k, down, x);
            }
            if (fresh != 0) {
                result[r] = i + 1;
                break;
            }
        }
    });
    return result;
}

}  // namespace anisoperc
