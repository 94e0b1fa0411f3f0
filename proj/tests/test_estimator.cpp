#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "anisoperc/bounds.hpp"
#include "anisoperc/errors.hpp"
#include "anisoperc/estimator.hpp"

using namespace anisoperc;

namespace {

LatticeSpec torus(int d, int s, int side_d, int side_s) { return {d, s, side_d, side_s, Boundary::periodic}; }

std::vector<double> logistic(const std::vector<double>& grid, double center, double width) {
    std::vector<double> r;
    for (double q : grid) r.push_back(1.0 / (1.0 + std::exp(-(q - center) / width)));
    return r;
}

std::vector<double> grid01(int n) {
    std::vector<double> g;
    for (int i = 0; i < n; ++i) g.push_back(static_cast<double>(i) / (n - 1));
    return g;
}

}  // namespace

TEST_CASE("power-law fit recovers exact synthetic exponents") {
    const std::vector<double> x{0.1, 0.2, 0.4};
    std::vector<double> y;
    for (double v : x) y.push_back(7.0 * std::pow(v, 2.5));
    PowerLawFit f = fit_power_law(x, y);
    CHECK(f.exponent == doctest::Approx(2.5).epsilon(1e-10));
    CHECK(f.amplitude == doctest::Approx(7.0).epsilon(1e-10));
    CHECK(f.r_squared == doctest::Approx(1.0));
    CHECK(f.stderr_ < 1e-10);
    f = fit_power_law(x, y, {1.0, 5.0, 0.25});
    CHECK(f.exponent == doctest::Approx(2.5).epsilon(1e-10));

    const std::vector<double> lin{0.3, 0.6, 1.2, 2.4};
    CHECK(fit_power_law({0.1, 0.2, 0.4, 0.8}, lin).exponent == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(fit_power_law({0.1, 0.0, 0.4}, y), DomainError);
    CHECK_THROWS_AS(fit_power_law({0.1, 0.2, 0.4}, {1.0, -1.0, 2.0}), DomainError);
    CHECK_THROWS_AS(fit_power_law({0.1, 0.2}, {1.0, 2.0}), DomainError);
    CHECK_THROWS_AS(fit_power_law(x, y, {1.0, 0.0, 1.0}), DomainError);
}

TEST_CASE("power-law fit is noisy-data sane") {
    // Multiplicative wiggle: slope stays close, stderr and r^2 reflect the scatter.
    std::vector<double> x, y;
    for (int i = 0; i < 8; ++i) {
        x.push_back(0.02 * std::pow(1.5, i));
        y.push_back(3.0 * std::pow(x.back(), 1.7) * (i % 2 ? 1.05 : 0.95));
    }
    const PowerLawFit f = fit_power_law(x, y);
    CHECK(f.exponent == doctest::Approx(1.7).epsilon(0.05));
    CHECK(f.stderr_ > 0.0);
    CHECK(f.r_squared < 1.0);
    CHECK(f.r_squared > 0.95);
}

TEST_CASE("pchip interpolates nodes, reproduces lines and preserves monotonicity") {
    const std::vector<double> x{0.0, 0.1, 0.3, 0.35, 0.8, 1.0};
    std::vector<double> lin;
    for (double v : x) lin.push_back(2.0 * v - 1.0);
    const Pchip fl(x, lin);
    for (double t = 0.0; t <= 1.0; t += 0.01) CHECK(fl(t) == doctest::Approx(2.0 * t - 1.0).epsilon(1e-12));

    const std::vector<double> step{0.0, 0.0, 0.1, 0.9, 1.0, 1.0};
    const Pchip fs(x, step);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(fs(x[i]) == doctest::Approx(step[i]));
    double prev = -1.0;
    for (double t = 0.0; t <= 1.0; t += 0.001) {
        const double v = fs(t);
        CHECK(v >= prev - 1e-15);
        CHECK((v >= 0.0 && v <= 1.0));
        prev = v;
    }
    CHECK_THROWS_AS(Pchip({0.0, 0.0}, {1.0, 2.0}), DomainError);
}

TEST_CASE("crossing finder on synthetic finite-size curves") {
    const std::vector<double> g = grid01(200);
    const CrossingResult c = find_crossing(g, logistic(g, 0.3, 0.05), logistic(g, 0.3, 0.025));
    REQUIRE(c.found);
    CHECK(c.q == doctest::Approx(0.3).epsilon(1e-3));
    CHECK(c.r == doctest::Approx(0.5).epsilon(1e-3));

    // A spurious sign change in the saturated tail is ignored.
    std::vector<double> a = logistic(g, 0.3, 0.05), b = logistic(g, 0.3, 0.025);
    for (std::size_t i = 190; i < 200; ++i) {
        a[i] = 0.999;
        b[i] = (i % 2) ? 0.9985 : 0.9995;
    }
    const CrossingResult c2 = find_crossing(g, a, b);
    REQUIRE(c2.found);
    CHECK(c2.q == doctest::Approx(0.3).epsilon(1e-3));

    CHECK_FALSE(find_crossing(g, logistic(g, 0.3, 0.05), logistic(g, 0.5, 0.025)).found);
    CHECK_FALSE(find_crossing(g, a, a).found);
}

TEST_CASE("estimate_chi trivial and one-dimensional values") {
    const ChiEstimate zero = estimate_chi(torus(1, 1, 16, 16), {0.0, 0.0}, 5, 1);
    CHECK(zero.chi == 1.0);
    CHECK(zero.se == 0.0);
    CHECK_FALSE(zero.supercritical);

    // q = 0 leaves independent rings of length 4096: chi_1(p) up to e^-4096 corrections.
    for (double p : {0.3, 0.5, 0.8}) {
        const ChiEstimate e = estimate_chi(torus(1, 1, 4096, 4), {p, 0.0}, 40, 11);
        CAPTURE(p);
        CHECK(std::abs(e.chi - chi_1_exact(p)) <= 3.0 * e.se);
        CHECK(e.se > 0.0);
    }

    const ChiEstimate super = estimate_chi(torus(1, 1, 16, 16), {0.9, 0.9}, 20, 3);
    CHECK(super.supercritical);
    CHECK(super.crossed_fraction > 0.9);
}

TEST_CASE("jackknife error of a mean equals the classical standard error") {
    const std::vector<double> v{1.0, 4.0, 2.0, 8.0, 5.0, 7.0};
    double m = 0.0;
    for (double x : v) m += x;
    m /= v.size();
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    CHECK(jackknife_mean_se(v) == doctest::Approx(std::sqrt(ss / (v.size() - 1) / v.size())));
}

TEST_CASE("estimate_qc flags: degenerate line and supercritical D-sublattice") {
    QcOptions opt;
    opt.pc_d = 1.0;
    const QcEstimate deg = estimate_qc({torus(1, 1, 16, 16), torus(1, 1, 32, 32)}, 0.0, 10, 1, opt);
    CHECK(deg.degenerate);
    CHECK(deg.qc_hat == 1.0);
    opt.pc_d = 0.5;
    const QcEstimate above = estimate_qc({torus(2, 1, 16, 4), torus(2, 1, 32, 8)}, 0.6, 10, 1, opt);
    CHECK(above.at_or_above_pc);
    CHECK(above.qc_hat == 0.0);
    CHECK_THROWS_AS(estimate_qc({torus(1, 1, 16, 16)}, 0.5, 10, 1), ConfigError);
}

TEST_CASE("estimate_qc on the d=s=1 Kesten line") {
    QcOptions opt;
    opt.pc_d = 1.0;
    opt.bootstrap = 100;
    const QcEstimate e = estimate_qc({torus(1, 1, 32, 32), torus(1, 1, 64, 64)}, 0.5, 200, 2024, opt);
    CHECK(e.method == QcMethod::wrap_crossing);
    CHECK(e.sizes_used.size() == 2);
    CHECK(e.qc_hat == doctest::Approx(0.5).epsilon(0.06));
    CHECK(e.ci_halfwidth > 0.0);
    CHECK(e.ci_halfwidth < 0.05);
    CHECK(std::abs(e.qc_hat - 0.5) <= 3.0 * e.ci_halfwidth + 0.01);
    CHECK(e.bootstrap_used + e.bootstrap_failed == 100);

    const QcEstimate again = estimate_qc({torus(1, 1, 32, 32), torus(1, 1, 64, 64)}, 0.5, 200, 2024, opt);
    CHECK(again.qc_hat == e.qc_hat);
    CHECK(again.ci_halfwidth == e.ci_halfwidth);
    opt.workers = 3;
    const QcEstimate threaded = estimate_qc({torus(1, 1, 32, 32), torus(1, 1, 64, 64)}, 0.5, 200, 2024, opt);
    CHECK(threaded.qc_hat == e.qc_hat);

    QcOptions level = opt;
    level.method = QcMethod::binary_search_R;
    const QcEstimate b = estimate_qc({torus(1, 1, 64, 64)}, 0.5, 200, 7, level);
    CHECK(b.qc_hat == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("estimate_qc with a truncated bracket matches the full sweep") {
    QcOptions full;
    full.bootstrap = 20;
    QcOptions cut = full;
    cut.q_max = 0.45;
    const std::vector<LatticeSpec> ladder{torus(1, 1, 32, 32), torus(1, 1, 64, 64)};
    const QcEstimate a = estimate_qc(ladder, 0.8, 100, 5, full);
    const QcEstimate b = estimate_qc(ladder, 0.8, 100, 5, cut);
    CHECK(b.qc_hat == doctest::Approx(a.qc_hat).epsilon(0.01));
    CHECK(a.qc_hat == doctest::Approx(0.2).epsilon(0.25));
    CHECK(truncation_for(1000, 1.0) == -1);
    CHECK(truncation_for(100000, 0.1) > 10000);
}

TEST_CASE("estimate_qc at p = 0 and s = 2 recovers the square-lattice threshold") {
    const QcEstimate e = estimate_qc({torus(1, 2, 2, 32), torus(1, 2, 2, 64)}, 0.0, 150, 99);
    CHECK(e.qc_hat == doctest::Approx(0.5).epsilon(0.08));
}

TEST_CASE("identical curves never cross") {
    const SweepCurve c = sweep_q(torus(1, 1, 16, 16), 0.5, 20, 4);
    CHECK_THROWS_AS(estimate_qc_from_curves({c, c}), NoCrossingError);
}

TEST_CASE("psi and gamma fits and their comparison") {
    std::vector<QcEstimate> pts;
    for (double p : {0.7, 0.8, 0.9, 0.95}) {
        QcEstimate e;
        e.p = p;
        e.qc_hat = 0.6 * (1.0 - p);
        e.ci_halfwidth = 0.01 * e.qc_hat;
        pts.push_back(e);
    }
    const PsiFit psi = fit_psi(1, 2, 1.0, pts);
    CHECK(psi.psi_hat == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(psi.amplitude_hat == doctest::Approx(0.6).epsilon(1e-10));
    CHECK(psi.points.size() == 4);
    pts.back().p = 1.0;
    CHECK_THROWS_AS(fit_psi(1, 2, 1.0, pts), DomainError);

    std::vector<double> ps;
    std::vector<ChiEstimate> chis;
    for (double p : {0.99, 0.993, 0.996, 0.998}) {
        ps.push_back(p);
        ChiEstimate c;
        c.chi = chi_1_exact(p);
        c.se = 0.01 * c.chi;
        chis.push_back(c);
    }
    const ChiFit gam = fit_gamma(1, 1.0, ps, chis);
    CHECK(gam.gamma_hat == doctest::Approx(1.0).epsilon(0.01));

    const PsiGammaReport strict = psi_gamma_report(2, 2.0, 0.1, 2.4, 0.1);
    CHECK(strict.consistent_with_le);
    CHECK_FALSE(strict.consistent_with_equal);
    CHECK(strict.difference == doctest::Approx(-0.4));
    CHECK(strict.pooled_se == doctest::Approx(std::sqrt(0.02)));
    const PsiGammaReport eq = psi_gamma_report(1, 1.0, 0.05, 1.02, 0.05);
    CHECK(eq.consistent_with_equal);
    CHECK(eq.consistent_with_le);
    CHECK_FALSE(psi_gamma_report(1, 1.5, 0.05, 1.0, 0.05).consistent_with_le);

    ChiFit other = gam;
    other.d = 2;
    CHECK_THROWS_AS(psi_gamma_report(psi, other), DomainError);
}

TEST_CASE("site threshold of the square lattice") {
    const SiteThresholdEstimate e = estimate_site_threshold(2, 24, 150, 8, 50);
    CHECK(e.pc_hat == doctest::Approx(0.592746).epsilon(0.05));
    CHECK(e.ci_halfwidth > 0.0);
}
