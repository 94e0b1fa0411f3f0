#include "anisoperc/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "anisoperc/errors.hpp"

namespace anisoperc {

namespace {

void require_probability(double x, const char* what) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError(std::string(what) + " must lie in [0,1]");
}

}  // namespace

double chi_1_exact(double p) {
    if (p == 1.0) throw DomainError("chi_1: diverges at p = 1");
    if (!(p >= 0.0 && p < 1.0)) throw DomainError("chi_1: p must lie in [0,1)");
    return (1.0 + p) / (1.0 - p);
}

double qc_lower_bound(const BoundInputs& in) {
    if (!(in.chi_d > 0.0) || !std::isfinite(in.chi_d)) throw DomainError("qc_lower_bound: chi_d must be finite and > 0");
    if (in.s < 1) throw DomainError("qc_lower_bound: s must be >= 1");
    return std::min(1.0, 1.0 / (2.0 * in.s * in.chi_d));
}

SeriesBound series_chi_bound(const BoundInputs& in) {
    if (!(in.chi_d > 0.0) || !std::isfinite(in.chi_d)) throw DomainError("series_chi_bound: chi_d must be finite and > 0");
    require_probability(in.q, "series_chi_bound: q");
    const double ratio = 2.0 * in.s * in.q * in.chi_d;
    if (ratio >= 1.0) return {true, 0.0};
    return {false, in.chi_d / (1.0 - ratio)};
}

double kesten_line(double p) {
    require_probability(p, "kesten_line: p");
    return 1.0 - p;
}

TailProbability run_tail_probability(double p, double k) {
    require_probability(p, "run_tail_probability: p");
    if (!(k >= 0.0)) throw DomainError("run_tail_probability: k must be >= 0");
    if (k == 0.0) return {1.0, p == 0.0 || p == 1.0};
    if (p == 0.0) return {0.0, true};
    if (p == 1.0) return {1.0, true};
    return {std::pow(p, k), false};
}

double good_run_length(double p, double epsilon) { return chi_1_exact(p) * epsilon; }

bool run_tail_condition_holds(double p, double epsilon) {
    if (!(p > 0.0 && p < 1.0)) return false;
    return run_tail_probability(p, good_run_length(p, epsilon)).value >= 1.0 - 3.0 * epsilon;
}

GoodVertexBound good_vertex_prob_lower(const RenormInputs& in) {
    if (!(in.epsilon > 0.0)) throw DomainError("good_vertex_prob_lower: epsilon must be > 0");
    if (!(in.alpha > 0.0)) throw DomainError("good_vertex_prob_lower: alpha must be > 0");
    if (in.s < 2) throw DomainError("good_vertex_prob_lower: s must be >= 2");
    require_probability(in.p, "good_vertex_prob_lower: p");
    GoodVertexBound out;
    out.value = (1.0 - 3.0 * in.epsilon) * std::pow(-std::expm1(-in.alpha * in.epsilon), in.s);
    if (in.p > 0.0 && in.p < 1.0) out.run_tail = run_tail_probability(in.p, good_run_length(in.p, in.epsilon)).value;
    if (in.epsilon >= 1.0 / 3.0) out.status = RegimeStatus::nonpositive;
    else if (!run_tail_condition_holds(in.p, in.epsilon)) out.status = RegimeStatus::invalid_regime;
    return out;
}

Certificate renorm_certifies_percolation(const RenormInputs& in) {
    if (!in.site_threshold_s) throw ConfigError("renorm certificate: site threshold for Z^s is missing");
    const GoodVertexBound bound = good_vertex_prob_lower(in);
    Certificate c;
    c.status = bound.status;
    c.pbar_lower = bound.value;
    c.margin = bound.value - *in.site_threshold_s;
    c.q_hypothesis = in.p < 1.0 ? in.alpha * (1.0 - in.p) / (1.0 + in.p) : 0.0;
    c.hypothesis_holds = in.q > c.q_hypothesis;
    c.certified = bound.status == RegimeStatus::valid && c.hypothesis_holds && c.margin > 0.0;
    return c;
}

double conjecture2_probe(double qc_estimate, double chi_d) {
    if (!std::isfinite(qc_estimate) || !std::isfinite(chi_d)) throw DomainError("conjecture2_probe: inputs must be finite");
    return qc_estimate * chi_d;
}

}  // namespace anisoperc
