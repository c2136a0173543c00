#pragma once

// Perturbed multiplicative walk: R = sup over n >= 1 of A_1...A_{n-1} B_n.
// Paths are simulated until the running product drops to tau or a step cap
// is hit. Stopping looks only at the product of A factors, so rescaling the
// perturbation (b_scale) never changes which steps a path takes.

#include <cstdint>
#include <vector>

#include "prw/model.hpp"
#include "prw/rng.hpp"

namespace prw::sup {

inline constexpr uint64_t kDefaultStepCap = 10000;

struct SupSample {
    double value = 0.0;
    uint64_t steps = 0;
    double pi_final = 1.0;
    bool truncated = false; // hit the step cap before the product reached tau
};

SupSample sample_sup(const model::ModelSpec& m, double tau, uint64_t step_cap,
                     RngStream& rng, double b_scale = 1.0);

struct ExceedanceResult {
    std::vector<double> thresholds;
    std::vector<uint64_t> counts; // paths with R > thresholds[j]
    uint64_t n_paths = 0;
    uint64_t truncated = 0;
    double mean_steps = 0.0;
};

// One ensemble evaluated against every threshold, so estimates at different
// thresholds (and different b_scale values under the same purpose) are
// coupled path by path.
ExceedanceResult exceedance_counts(const model::ModelSpec& m,
                                   const std::vector<double>& thresholds,
                                   uint64_t n_paths, double tau,
                                   uint64_t master_seed, unsigned workers,
                                   uint64_t purpose = kPurposeSup,
                                   double b_scale = 1.0,
                                   uint64_t step_cap = kDefaultStepCap);

struct MinMomentResult {
    double estimate = 0.0; // median over block means of min(A R, B)_+^alpha
    double sigma = 0.0;    // spread-based uncertainty of that median
    double estimate_half = 0.0;
    double sigma_half = 0.0;
    bool stable = false; // half-ensemble median agrees within noise
    uint64_t n_blocks = 0;
    uint64_t block_size = 0;
    uint64_t truncated = 0;
};

// Median-of-means estimate of E min(A R, B)_+^alpha with R drawn fresh and
// independent of the (A, B) pair. Block index keys the random streams, so
// the result does not depend on the worker count.
MinMomentResult min_moment_alpha(const model::ModelSpec& m, uint64_t n_blocks,
                                 uint64_t block_size, double tau,
                                 uint64_t master_seed, unsigned workers);

struct KsResult {
    double statistic = 0.0;
    uint64_t n = 0;
    uint64_t truncated = 0;
};

// Two-sample Kolmogorov-Smirnov distance between R and max(A R', B) with R'
// an independent copy; the supremum law is a fixed point of that map.
KsResult fixed_point_distance(const model::ModelSpec& m, uint64_t n, double tau,
                              uint64_t master_seed, unsigned workers);

struct PluginResult {
    double value = 0.0;
    double stderror = 0.0;
    uint64_t n = 0;
    uint64_t truncated = 0;
};

// Plain-mean estimate of E[max(A R, B)_+^alpha - (A R)_+^alpha]; the summand
// is nonnegative and, for bounded perturbations, bounded.
PluginResult goldie_constant_plugin(const model::ModelSpec& m, uint64_t n,
                                    double tau, uint64_t master_seed,
                                    unsigned workers);

struct TailPoint {
    double u = 0.0; // log threshold; the threshold itself is e^u
    double p_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double theory_first = 0.0;
    double theory_second = 0.0;
    double bias_bound = 0.0;
};

// Multipliers for the theory columns; anything other than 1 turns the curve
// into a deliberately wrong control.
struct TheoryScales {
    double tilde_scale = 1.0;
    double rho_scale = 1.0;
    double chat_scale = 1.0;
};

struct TailCurve {
    std::vector<TailPoint> points;
    uint64_t n_paths = 0;
    uint64_t truncated = 0;
    double mean_steps = 0.0;
    double chat = 0.0;
};

// Upper bound on how much the tau stop can depress P(R > e^u).
double stopping_bias_bound(const model::ModelSpec& m, double tau, double u);

// Exceedance curve over e^{u_grid} with first- and second-order predictions.
// chat is the constant subtracted by the second-order column. Throws
// PreconditionError when the stopping bias could reach five percent of the
// smallest first-order value on the grid.
TailCurve tail_curve(const model::ModelSpec& m,
                     const std::vector<double>& u_grid, uint64_t n_paths,
                     double tau, uint64_t master_seed, unsigned workers,
                     double chat, const TheoryScales& scales = {});

} // namespace prw::sup
