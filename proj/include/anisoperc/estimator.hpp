#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "anisoperc/lattice.hpp"
#include "anisoperc/sampler.hpp"

namespace anisoperc {

enum class QcMethod { wrap_crossing, binary_search_R };

std::string to_string(QcMethod m);
QcMethod qc_method_from_string(const std::string& s);

struct QcEstimate {
    double p = 0.0;
    double qc_hat = 0.0;
    double ci_halfwidth = 0.0;
    std::vector<LatticeSpec> sizes_used;
    QcMethod method = QcMethod::wrap_crossing;
    int replicates = 0;
    std::uint64_t seed = 0;
    // Only S-edges: Z^1 has no transition below q = 1.
    bool degenerate = false;
    // p >= p_c(d): the D-sublattice percolates on its own.
    bool at_or_above_pc = false;
    double r_at_crossing = 0.0;
    int bootstrap_used = 0;
    int bootstrap_failed = 0;
};

struct QcOptions {
    QcMethod method = QcMethod::wrap_crossing;
    CrossingAxes axes = CrossingAxes::any;
    int grid_points = 200;
    int bootstrap = 200;
    // Search bracket. The grid is fitted automatically to the region where the
    // wrap curves leave 0 and 1, inside [q_min, q_max].
    double q_min = 0.0;
    double q_max = 1.0;
    // Crossings are accepted only where the mean wrap probability lies here.
    double r_window_lo = 0.02;
    double r_window_hi = 0.99;
    // binary_search_R: q at which R_L(q) equals this target.
    double r_target = 0.5;
    // Critical point of the D-sublattice; p >= pc_d short-circuits to q_c = 0.
    std::optional<double> pc_d;
    int workers = 0;
};

// Sweeps each lattice of the ladder at p (truncated above q_max) and locates the
// crossing of consecutive wrap-probability curves; the largest pair decides.
QcEstimate estimate_qc(const std::vector<LatticeSpec>& ladder, double p, int replicates, std::uint64_t seed,
                       const QcOptions& options = {});

// Same analysis on curves that were already swept.
QcEstimate estimate_qc_from_curves(const std::vector<SweepCurve>& curves, const QcOptions& options = {});

// Lowest bracket limit for which a truncated sweep still covers q_max.
Index truncation_for(Index total_s, double q_max);

// Monotone piecewise cubic through (x[i], y[i]) with strictly increasing x.
class Pchip {
public:
    Pchip(std::vector<double> x, std::vector<double> y);
    double operator()(double t) const;

private:
    std::vector<double> x_, y_, m_;
};

struct CrossingResult {
    bool found = false;
    double q = 0.0;
    double r = 0.0;
};

// Root of R_small - R_large on the grid: among sign changes whose average R lies
// in [lo, hi], the one closest to R = 1/2.
CrossingResult find_crossing(const std::vector<double>& grid, const std::vector<double>& r_small,
                             const std::vector<double>& r_large, double lo = 0.02, double hi = 0.99);

struct ChiEstimate {
    double chi = 0.0;
    double se = 0.0;
    double crossed_fraction = 0.0;
    bool supercritical = false;
    int replicates = 0;
};

enum class ExcludeLargest { when_crossed, never, always };

struct ChiOptions {
    ExcludeLargest exclude = ExcludeLargest::when_crossed;
    int workers = 0;
};

// Box-averaged cluster size of a uniform vertex, jackknife error over replicates.
ChiEstimate estimate_chi(const LatticeSpec& spec, const Params& params, int replicates, std::uint64_t seed,
                         const ChiOptions& options = {});

double jackknife_mean_se(const std::vector<double>& values);

struct PowerLawFit {
    double exponent = 0.0;
    double amplitude = 0.0;
    double stderr_ = 0.0;
    double r_squared = 0.0;
};

// Weighted least squares of log y on log x. Empty weights means equal weights.
PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& weights = {});

struct FitPoint {
    double p = 0.0;
    double value = 0.0;
    double weight = 1.0;
};

struct PsiFit {
    int d = 1;
    int s = 1;
    double pc_d = 1.0;
    std::vector<FitPoint> points;
    double psi_hat = 0.0;
    double amplitude_hat = 0.0;
    double stderr_ = 0.0;
    double r_squared = 0.0;
};

struct ChiFit {
    int d = 1;
    int s = 1;
    double pc_d = 1.0;
    std::vector<FitPoint> points;
    double gamma_hat = 0.0;
    double amplitude_hat = 0.0;
    double stderr_ = 0.0;
    double r_squared = 0.0;
};

// q_c ~ A |p - pc_d|^psi; weights are inverse variances of log q_c from the CIs.
PsiFit fit_psi(int d, int s, double pc_d, const std::vector<QcEstimate>& estimates);
// chi ~ A |p - pc_d|^(-gamma).
ChiFit fit_gamma(int d, double pc_d, const std::vector<double>& p, const std::vector<ChiEstimate>& chi);

struct PsiGammaReport {
    int d = 1;
    double psi_hat = 0.0;
    double psi_se = 0.0;
    double gamma_hat = 0.0;
    double gamma_se = 0.0;
    double difference = 0.0;
    double pooled_se = 0.0;
    bool consistent_with_equal = false;
    bool consistent_with_le = false;
    std::optional<double> gamma_reference;
};

PsiGammaReport psi_gamma_report(const PsiFit& psi, const ChiFit& gamma, double z = 1.96);
PsiGammaReport psi_gamma_report(int d, double psi_hat, double psi_se, double gamma_hat, double gamma_se,
                                double z = 1.96);

struct SiteThresholdEstimate {
    int s = 2;
    std::vector<int> sides;
    double pc_hat = 0.0;
    double ci_halfwidth = 0.0;
    int replicates = 0;
};

// Site percolation threshold of Z^s from wrap crossings on tori of side L and 2L.
SiteThresholdEstimate estimate_site_threshold(int s, int side, int replicates, std::uint64_t seed,
                                              int bootstrap = 200, int workers = 0);

}  // namespace anisoperc
