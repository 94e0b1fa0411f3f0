#pragma once

#include <optional>

namespace anisoperc {

// chi_1(p) = (1+p)/(1-p), the mean cluster size of bond percolation on Z.
double chi_1_exact(double p);

struct BoundInputs {
    double p = 0.0;
    double q = 0.0;
    int d = 1;
    int s = 1;
    double chi_d = 1.0;  // exact for d = 1, simulated or supplied otherwise
};

// Below 1/(2 s chi_d) there is no infinite cluster. Clamped to 1.
double qc_lower_bound(const BoundInputs& in);

struct SeriesBound {
    bool divergent = false;
    double value = 0.0;  // meaningful only when !divergent
};

// sum_n (2s)^n chi_d^(n+1) q^n in closed form: chi_d / (1 - 2 s q chi_d).
SeriesBound series_chi_bound(const BoundInputs& in);

// Exact critical curve q = 1 - p of Z x Z.
double kesten_line(double p);

struct TailProbability {
    double value = 0.0;
    bool degenerate = false;  // p in {0, 1}
};

// P(one-directional open run from a vertex has length >= k) = p^k.
TailProbability run_tail_probability(double p, double k);

// Run length (1+p)/(1-p) * epsilon required of a good vertex.
double good_run_length(double p, double epsilon);

// p^{(1+p)/(1-p) eps} >= 1 - 3 eps, the regime in which the good-vertex bound applies.
bool run_tail_condition_holds(double p, double epsilon);

struct RenormInputs {
    double p = 0.0;
    double q = 0.0;
    int s = 2;
    double epsilon = 0.1;
    double alpha = 1.0;
    std::optional<double> site_threshold_s;
};

enum class RegimeStatus { valid, invalid_regime, nonpositive };

struct GoodVertexBound {
    RegimeStatus status = RegimeStatus::valid;
    double value = 0.0;     // (1 - 3 eps)(1 - e^{-alpha eps})^s
    double run_tail = 0.0;  // p^{(1+p)/(1-p) eps}
};

GoodVertexBound good_vertex_prob_lower(const RenormInputs& in);

struct Certificate {
    bool certified = false;
    double margin = 0.0;  // pbar lower bound minus the site threshold
    double pbar_lower = 0.0;
    double q_hypothesis = 0.0;  // alpha (1-p)/(1+p)
    bool hypothesis_holds = false;
    RegimeStatus status = RegimeStatus::valid;
};

// Throws ConfigError when the site threshold is missing.
Certificate renorm_certifies_percolation(const RenormInputs& in);

// qc * chi_d; bounded across p is what the upper-bound conjecture predicts.
double conjecture2_probe(double qc_estimate, double chi_d);

}  // namespace anisoperc
