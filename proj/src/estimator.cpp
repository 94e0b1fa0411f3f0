#include "anisoperc/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "anisoperc/errors.hpp"
#include "anisoperc/parallel.hpp"
#include "anisoperc/rng.hpp"

namespace anisoperc {

std::string to_string(QcMethod m) { return m == QcMethod::wrap_crossing ? "wrap_crossing" : "binary_search_R"; }

QcMethod qc_method_from_string(const std::string& s) {
    if (s == "wrap_crossing") return QcMethod::wrap_crossing;
    if (s == "binary_search_R") return QcMethod::binary_search_R;
    throw ConfigError("unknown qc method '" + s + "'");
}

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t i) {
    std::uint64_t z = seed + (i + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double quantile(std::vector<double> v, double u) {
    std::sort(v.begin(), v.end());
    const double pos = u * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const std::size_t j = std::min(i + 1, v.size() - 1);
    return v[i] + (pos - static_cast<double>(i)) * (v[j] - v[i]);
}

// Per-replicate probability curves of one lattice size.
struct ReplicateCurves {
    std::vector<double> matrix;  // [replicate][grid]
    std::size_t reps = 0;
    std::size_t points = 0;

    std::vector<double> mean(const std::vector<std::uint32_t>* pick = nullptr) const {
        std::vector<double> out(points, 0.0);
        for (std::size_t i = 0; i < reps; ++i) {
            const std::size_t r = pick ? (*pick)[i] : i;
            const double* row = matrix.data() + r * points;
            for (std::size_t g = 0; g < points; ++g) out[g] += row[g];
        }
        for (double& x : out) x /= static_cast<double>(reps);
        return out;
    }
};

// Level crossing of a monotone-ish curve: first q with R(q) >= target.
CrossingResult find_level(const std::vector<double>& grid, const std::vector<double>& r, double target) {
    CrossingResult out;
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        if (r[j] < target && r[j + 1] >= target) {
            const Pchip f(grid, r);
            double a = grid[j], b = grid[j + 1];
            for (int it = 0; it < 100 && b - a > 1e-15; ++it) {
                const double m = 0.5 * (a + b);
                (f(m) < target ? a : b) = m;
            }
            out.found = true;
            out.q = 0.5 * (a + b);
            out.r = target;
            return out;
        }
    }
    return out;
}

struct Located {
    CrossingResult point;
    double ci_halfwidth = 0.0;
    int used = 0;
    int failed = 0;
};

// Locates the crossing (or the level) and bootstraps replicates independently per size.
template <typename Locate>
Located locate_with_bootstrap(const std::vector<const ReplicateCurves*>& sizes, int bootstrap, std::uint64_t seed,
                              double bracket_width, Locate&& locate) {
    Located out;
    std::vector<std::vector<double>> means;
    for (const auto* c : sizes) means.push_back(c->mean());
    out.point = locate(means);
    if (!out.point.found) return out;
    PhiloxStream stream(seed, 0, StreamPurpose::bootstrap);
    std::vector<double> qs;
    std::vector<std::uint32_t> pick;
    for (int b = 0; b < bootstrap; ++b) {
        for (std::size_t k = 0; k < sizes.size(); ++k) {
            pick.resize(sizes[k]->reps);
            for (auto& i : pick) i = stream.bounded(static_cast<std::uint32_t>(sizes[k]->reps));
            means[k] = sizes[k]->mean(&pick);
        }
        const CrossingResult c = locate(means);
        if (c.found) qs.push_back(c.q);
        else ++out.failed;
    }
    out.used = static_cast<int>(qs.size());
    if (qs.size() >= 2) out.ci_halfwidth = 0.5 * (quantile(qs, 0.975) - quantile(qs, 0.025));
    else if (bootstrap > 0) out.ci_halfwidth = bracket_width;
    return out;
}

// q at which the canonical wrap probability of the curve reaches level.
double solve_level(const SweepCurve& curve, CrossingAxes axes, double level, double lo, double hi) {
    auto r = [&](double q) { return convolve_canonical(curve, q, axes).crossing; };
    if (r(hi) < level) return hi;
    if (r(lo) >= level) return lo;
    for (int it = 0; it < 60 && hi - lo > 1e-9; ++it) {
        const double m = 0.5 * (lo + hi);
        (r(m) < level ? lo : hi) = m;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> linear_grid(double lo, double hi, int n) {
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return g;
}

std::string no_crossing_message(const std::vector<double>& grid, const std::vector<double>& a,
                                const std::vector<double>& b) {
    std::ostringstream os;
    os << "wrap curves do not cross in [" << grid.front() << ", " << grid.back() << "]: R_small " << a.front()
       << ".." << a.back() << ", R_large " << b.front() << ".." << b.back();
    return os.str();
}

}  // namespace

Index truncation_for(Index total_s, double q_max) {
    if (q_max >= 1.0) return -1;
    const double n = static_cast<double>(total_s);
    const double m = n * q_max + 10.0 * std::sqrt(n * q_max * (1.0 - q_max)) + 20.0;
    return m >= n ? -1 : static_cast<Index>(std::ceil(m));
}

Pchip::Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw DomainError("pchip: need >= 2 matching points");
    m_.assign(n, 0.0);
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        h[k] = x_[k + 1] - x_[k];
        if (!(h[k] > 0.0)) throw DomainError("pchip: x must be strictly increasing");
        delta[k] = (y_[k + 1] - y_[k]) / h[k];
    }
    if (n == 2) {
        m_[0] = m_[1] = delta[0];
        return;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (delta[k - 1] * delta[k] <= 0.0) continue;
        const double w1 = 2.0 * h[k] + h[k - 1];
        const double w2 = h[k] + 2.0 * h[k - 1];
        m_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
        double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (m * d0 <= 0.0) return 0.0;
        if (d0 * d1 <= 0.0 && std::abs(m) > 3.0 * std::abs(d0)) return 3.0 * d0;
        return m;
    };
    m_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    m_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
}

double Pchip::operator()(double t) const {
    if (t <= x_.front()) return y_.front();
    if (t >= x_.back()) return y_.back();
    const auto k = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), t) - x_.begin() - 1);
    const double h = x_[k + 1] - x_[k];
    const double u = (t - x_[k]) / h;
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * y_[k] + (u3 - 2 * u2 + u) * h * m_[k] + (-2 * u3 + 3 * u2) * y_[k + 1] +
           (u3 - u2) * h * m_[k + 1];
}

CrossingResult find_crossing(const std::vector<double>& grid, const std::vector<double>& r_small,
                             const std::vector<double>& r_large, double lo, double hi) {
    CrossingResult best;
    const std::size_t n = grid.size();
    if (n < 2 || r_small.size() != n || r_large.size() != n) throw DomainError("find_crossing: size mismatch");
    std::optional<Pchip> fs, fl;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double d0 = r_small[j] - r_large[j];
        const double d1 = r_small[j + 1] - r_large[j + 1];
        // Below the transition the smaller system wraps more easily.
        if (!(d0 > 0.0 && d1 <= 0.0)) continue;
        if (!fs) {
            fs.emplace(grid, r_small);
            fl.emplace(grid, r_large);
        }
        double a = grid[j], b = grid[j + 1];
        for (int it = 0; it < 100 && b - a > 1e-15; ++it) {
            const double m = 0.5 * (a + b);
            ((*fs)(m) - (*fl)(m) > 0.0 ? a : b) = m;
        }
        const double q = 0.5 * (a + b);
        const double r = 0.5 * ((*fs)(q) + (*fl)(q));
        if (r < lo || r > hi) continue;
        if (std::abs(r - 0.5) < best_gap) {
            best_gap = std::abs(r - 0.5);
            best = {true, q, r};
        }
    }
    return best;
}

QcEstimate estimate_qc_from_curves(const std::vector<SweepCurve>& curves, const QcOptions& options) {
    if (curves.empty()) throw ConfigError("estimate_qc: no sweep curves");
    const bool crossing = options.method == QcMethod::wrap_crossing;
    if (crossing && curves.size() < 2) throw ConfigError("estimate_qc: wrap_crossing needs at least two sizes");
    if (options.grid_points < 4) throw ConfigError("estimate_qc: grid_points must be >= 4");
    if (!(options.q_min >= 0.0 && options.q_min < options.q_max && options.q_max <= 1.0))
        throw ConfigError("estimate_qc: bad bracket");
    QcEstimate est;
    est.p = curves.front().p;
    est.method = options.method;
    est.replicates = curves.front().replicates;
    est.seed = curves.front().seed;
    for (const auto& c : curves) {
        if (c.p != est.p) throw ConfigError("estimate_qc: curves disagree on p");
        est.sizes_used.push_back(c.spec);
    }
    const LatticeSpec& spec = curves.front().spec;
    if (options.pc_d && est.p >= *options.pc_d) {
        est.at_or_above_pc = true;
        return est;
    }
    if (est.p == 0.0 && spec.s == 1) {
        est.degenerate = true;
        est.qc_hat = 1.0;
        return est;
    }

    // Fit the grid to where the curves actually move.
    double lo = options.q_max, hi = options.q_min;
    for (const auto& c : curves) {
        lo = std::min(lo, solve_level(c, options.axes, 0.002, options.q_min, options.q_max));
        hi = std::max(hi, solve_level(c, options.axes, 0.998, options.q_min, options.q_max));
    }
    const double pad = 0.05 * (hi - lo);
    lo = std::max(options.q_min, lo - pad);
    hi = std::min(options.q_max, hi + pad);
    if (!(hi > lo)) {
        lo = options.q_min;
        hi = options.q_max;
    }
    const std::vector<double> grid = linear_grid(lo, hi, options.grid_points);

    std::vector<ReplicateCurves> reps(curves.size());
    for (std::size_t i = 0; i < curves.size(); ++i) {
        reps[i].matrix = replicate_crossing_matrix(curves[i], grid, options.axes);
        reps[i].reps = static_cast<std::size_t>(curves[i].replicates);
        reps[i].points = grid.size();
    }
    Located loc;
    if (crossing) {
        const auto& small = reps[reps.size() - 2];
        const auto& large = reps.back();
        loc = locate_with_bootstrap({&small, &large}, options.bootstrap, est.seed, hi - lo,
                                    [&](const std::vector<std::vector<double>>& m) {
                                        return find_crossing(grid, m[0], m[1], options.r_window_lo,
                                                             options.r_window_hi);
                                    });
        if (!loc.point.found) throw NoCrossingError(no_crossing_message(grid, small.mean(), large.mean()));
    } else {
        loc = locate_with_bootstrap({&reps.back()}, options.bootstrap, est.seed, hi - lo,
                                    [&](const std::vector<std::vector<double>>& m) {
                                        return find_level(grid, m[0], options.r_target);
                                    });
        if (!loc.point.found)
            throw NoCrossingError("wrap curve never reaches R = " + std::to_string(options.r_target) +
                                  " inside the bracket");
    }
    est.qc_hat = loc.point.q;
    est.r_at_crossing = loc.point.r;
    est.ci_halfwidth = loc.ci_halfwidth;
    est.bootstrap_used = loc.used;
    est.bootstrap_failed = loc.failed;
    return est;
}

QcEstimate estimate_qc(const std::vector<LatticeSpec>& ladder, double p, int replicates, std::uint64_t seed,
                       const QcOptions& options) {
    if (ladder.empty()) throw ConfigError("estimate_qc: empty ladder");
    if (replicates < 2) throw ConfigError("estimate_qc: need at least two replicates");
    if (options.method == QcMethod::wrap_crossing && ladder.size() < 2)
        throw ConfigError("estimate_qc: wrap_crossing needs at least two sizes");
    Params{p, 0.0}.validate();
    // Flags that need no simulation.
    if ((options.pc_d && p >= *options.pc_d) || (p == 0.0 && ladder.front().s == 1)) {
        std::vector<SweepCurve> stubs(ladder.size());
        for (std::size_t i = 0; i < ladder.size(); ++i) {
            stubs[i].spec = ladder[i];
            stubs[i].p = p;
            stubs[i].replicates = replicates;
            stubs[i].seed = seed;
        }
        return estimate_qc_from_curves(stubs, options);
    }
    std::vector<SweepCurve> curves;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        const Lattice lattice(ladder[i]);
        SweepOptions so;
        so.max_open_s = truncation_for(lattice.s_edge_count(), options.q_max);
        so.workers = options.workers;
        curves.push_back(sweep_q(ladder[i], p, replicates, derive_seed(seed, i), so));
    }
    QcEstimate est = estimate_qc_from_curves(curves, options);
    est.seed = seed;
    return est;
}

double jackknife_mean_se(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    double total = 0.0;
    for (double v : values) total += v;
    std::vector<double> loo(n);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        loo[i] = (total - values[i]) / static_cast<double>(n - 1);
        mean += loo[i];
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : loo) ss += (x - mean) * (x - mean);
    return std::sqrt(ss * static_cast<double>(n - 1) / static_cast<double>(n));
}

ChiEstimate estimate_chi(const LatticeSpec& spec, const Params& params, int replicates, std::uint64_t seed,
                         const ChiOptions& options) {
    if (replicates < 1) throw ConfigError("estimate_chi: need at least one replicate");
    params.validate();
    spec.validate();
    std::vector<double> values(static_cast<std::size_t>(replicates));
    std::vector<std::uint8_t> crossed(static_cast<std::size_t>(replicates));
    parallel_for(values.size(), options.workers, [&](std::size_t r, int) {
        const ClusterStats st = cluster_stats(sample_config(spec, params, seed, static_cast<std::uint32_t>(r)));
        crossed[r] = st.crossed() ? 1 : 0;
        bool exclude = false;
        switch (options.exclude) {
            case ExcludeLargest::when_crossed: exclude = st.crossed(); break;
            case ExcludeLargest::always: exclude = true; break;
            case ExcludeLargest::never: break;
        }
        values[r] = st.mean_cluster_size(exclude);
    });
    ChiEstimate out;
    out.replicates = replicates;
    for (double v : values) out.chi += v;
    out.chi /= replicates;
    out.se = jackknife_mean_se(values);
    double c = 0.0;
    for (auto x : crossed) c += x;
    out.crossed_fraction = c / replicates;
    out.supercritical = out.crossed_fraction > 0.01;
    return out;
}

PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& weights) {
    const std::size_t n = x.size();
    if (y.size() != n || (!weights.empty() && weights.size() != n))
        throw DomainError("fit_power_law: size mismatch");
    if (n < 3) throw DomainError("fit_power_law: need at least 3 points");
    std::vector<double> lx(n), ly(n), w(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw DomainError("fit_power_law: x and y must be positive and finite");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        if (!weights.empty()) {
            if (!(weights[i] > 0.0) || !std::isfinite(weights[i]))
                throw DomainError("fit_power_law: weights must be positive and finite");
            w[i] = weights[i];
        }
    }
    double sw = 0.0, mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w[i];
        mx += w[i] * lx[i];
        my += w[i] * ly[i];
    }
    mx /= sw;
    my /= sw;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += w[i] * (lx[i] - mx) * (lx[i] - mx);
        sxy += w[i] * (lx[i] - mx) * (ly[i] - my);
        syy += w[i] * (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw DomainError("fit_power_law: x values must not all coincide");
    PowerLawFit fit;
    fit.exponent = sxy / sxx;
    const double intercept = my - fit.exponent * mx;
    fit.amplitude = std::exp(intercept);
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - intercept - fit.exponent * lx[i];
        rss += w[i] * r * r;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - rss / syy : 1.0;
    fit.stderr_ = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    return fit;
}

namespace {

// Inverse variances of log(value); equal weights unless every point has an error.
std::vector<double> log_weights(const std::vector<double>& value, const std::vector<double>& err) {
    std::vector<double> w(value.size(), 1.0);
    for (std::size_t i = 0; i < value.size(); ++i)
        if (!(err[i] > 0.0) || !std::isfinite(err[i])) return std::vector<double>(value.size(), 1.0);
    for (std::size_t i = 0; i < value.size(); ++i) {
        const double rel = err[i] / value[i];
        w[i] = 1.0 / (rel * rel);
    }
    return w;
}

}  // namespace

PsiFit fit_psi(int d, int s, double pc_d, const std::vector<QcEstimate>& estimates) {
    PsiFit fit;
    fit.d = d;
    fit.s = s;
    fit.pc_d = pc_d;
    std::vector<double> x, y, err;
    for (const auto& e : estimates) {
        if (!(e.p < pc_d)) throw DomainError("fit_psi: every point needs p < pc_d");
        x.push_back(pc_d - e.p);
        y.push_back(e.qc_hat);
        err.push_back(e.ci_halfwidth);
    }
    const std::vector<double> w = log_weights(y, err);
    const PowerLawFit pl = fit_power_law(x, y, w);
    for (std::size_t i = 0; i < estimates.size(); ++i) fit.points.push_back({estimates[i].p, y[i], w[i]});
    fit.psi_hat = pl.exponent;
    fit.amplitude_hat = pl.amplitude;
    fit.stderr_ = pl.stderr_;
    fit.r_squared = pl.r_squared;
    return fit;
}

ChiFit fit_gamma(int d, double pc_d, const std::vector<double>& p, const std::vector<ChiEstimate>& chi) {
    if (p.size() != chi.size()) throw DomainError("fit_gamma: size mismatch");
    ChiFit fit;
    fit.d = d;
    fit.s = 0;
    fit.pc_d = pc_d;
    std::vector<double> x, y, err;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] < pc_d)) throw DomainError("fit_gamma: every point needs p < pc_d");
        x.push_back(pc_d - p[i]);
        y.push_back(chi[i].chi);
        err.push_back(chi[i].se);
    }
    const std::vector<double> w = log_weights(y, err);
    const PowerLawFit pl = fit_power_law(x, y, w);
    for (std::size_t i = 0; i < p.size(); ++i) fit.points.push_back({p[i], y[i], w[i]});
    fit.gamma_hat = -pl.exponent;
    fit.amplitude_hat = pl.amplitude;
    fit.stderr_ = pl.stderr_;
    fit.r_squared = pl.r_squared;
    return fit;
}

PsiGammaReport psi_gamma_report(int d, double psi_hat, double psi_se, double gamma_hat, double gamma_se, double z) {
    PsiGammaReport r;
    r.d = d;
    r.psi_hat = psi_hat;
    r.psi_se = psi_se;
    r.gamma_hat = gamma_hat;
    r.gamma_se = gamma_se;
    r.difference = psi_hat - gamma_hat;
    r.pooled_se = std::hypot(psi_se, gamma_se);
    r.consistent_with_equal = std::abs(r.difference) <= z * r.pooled_se;
    r.consistent_with_le = r.difference <= z * r.pooled_se;
    return r;
}

PsiGammaReport psi_gamma_report(const PsiFit& psi, const ChiFit& gamma, double z) {
    if (psi.d != gamma.d) throw DomainError("psi_gamma_report: fits are for different d");
    return psi_gamma_report(psi.d, psi.psi_hat, psi.stderr_, gamma.gamma_hat, gamma.stderr_, z);
}

SiteThresholdEstimate estimate_site_threshold(int s, int side, int replicates, std::uint64_t seed, int bootstrap,
                                              int workers) {
    if (replicates < 2) throw ConfigError("estimate_site_threshold: need at least two replicates");
    SiteThresholdEstimate out;
    out.s = s;
    out.sides = {side, 2 * side};
    out.replicates = replicates;
    std::vector<ReplicateCurves> reps(2);
    std::vector<std::vector<Index>> firsts(2);
    std::vector<Index> totals(2);
    double lo = 1.0, hi = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
        firsts[i] = site_first_wrap(s, out.sides[i], replicates, derive_seed(seed, i), workers);
        totals[i] = static_cast<Index>(std::llround(std::pow(out.sides[i], s)));
        const auto [mn, mx] = std::minmax_element(firsts[i].begin(), firsts[i].end());
        lo = std::min(lo, static_cast<double>(*mn) / static_cast<double>(totals[i]));
        hi = std::max(hi, static_cast<double>(*mx) / static_cast<double>(totals[i]));
    }
    lo = std::max(0.0, lo - 0.05);
    hi = std::min(1.0, hi + 0.05);
    const std::vector<double> grid = linear_grid(lo, hi, 200);
    for (std::size_t i = 0; i < 2; ++i) {
        reps[i].matrix = first_event_matrix(totals[i], firsts[i], grid);
        reps[i].reps = static_cast<std::size_t>(replicates);
        reps[i].points = grid.size();
    }
    const Located loc = locate_with_bootstrap({&reps[0], &reps[1]}, bootstrap, seed, hi - lo,
                                              [&](const std::vector<std::vector<double>>& m) {
                                                  return find_crossing(grid, m[0], m[1]);
                                              });
    if (!loc.point.found) throw NoCrossingError(no_crossing_message(grid, reps[0].mean(), reps[1].mean()));
    out.pc_hat = loc.point.q;
    out.ci_halfwidth = loc.ci_halfwidth;
    return out;
}

}  // namespace anisoperc
