#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "prw/model.hpp"
#include "prw/rng.hpp"

namespace prw::renewal {

// Monte Carlo ensemble controls. Chunking and stream derivation are fixed
// (see rng.hpp), so results depend on (n_paths, seed, purpose) but never on
// the worker count.
struct McOptions {
    uint64_t n_paths = 100000;
    uint64_t seed = 1;
    unsigned workers = 1;
    uint64_t purpose = kPurposeRenewal;
    uint64_t step_cap = 1000000;
};

struct FunctionalEstimate {
    double value = 0.0;
    double stderror = 0.0;
    uint64_t n_paths = 0;
    uint64_t discarded = 0; // paths that hit the step cap, excluded from both
    double stop_level = 0.0;
};

// E sum_{n>=0} g(S_n) 1{window(S_n)} for the zero-started walk S with
// increments drawn from z. Each path stops once S exceeds
// u_max + 40/alpha; because E e^{-alpha Z} = 1, everything the walk would
// still contribute below that level carries a factor e^{-40}.
FunctionalEstimate renewal_functional_mc(const model::TiltedLaw& z,
                                         const std::function<double(double)>& g,
                                         const std::function<bool(double)>& window,
                                         double u_max, const McOptions& opt);

// Renewal mass of (a, b]. Thin wrapper over renewal_functional_mc with the
// indicator window, so identical options give bit-identical results.
FunctionalEstimate renewal_interval_mc(const model::TiltedLaw& z, double a,
                                       double b, const McOptions& opt);

// Renewal mass of every bin (edges[i], edges[i+1]] from one ensemble.
std::vector<FunctionalEstimate> renewal_bins_mc(const model::TiltedLaw& z,
                                                const std::vector<double>& edges,
                                                const McOptions& opt);

struct CheckPoint {
    double u = 0.0;
    double estimate = 0.0;
    double stderror = 0.0;
};

// H((-inf, u]) - u/EZ for each u of a sorted grid, one shared ensemble.
// Requires a strongly non-lattice increment law (the normal-kind tilt).
std::vector<CheckPoint> stone_remainders(const model::TiltedLaw& z,
                                         const std::vector<double>& u_grid,
                                         const McOptions& opt);

// e^{alpha u} H((-inf, -u]). The walk drifts up, so paths stop 40/alpha
// above the origin.
CheckPoint left_tail_scaled(const model::TiltedLaw& z, double u,
                            const McOptions& opt);

// ---------------------------------------------------------------------------
// Lattice convolution oracle
// ---------------------------------------------------------------------------

// Renewal masses on the grid {k*h} computed by repeated convolution of the
// tent-discretized increment law (mass- and mean-preserving). The table pads
// the requested window by 20/alpha on both sides; whatever leaks out, plus
// the residual when iteration stops, is compounded into truncation_bound.
struct LatticeTable {
    double h = 0.0;
    int64_t k_min = 0;
    std::vector<double> mass;
    double window_lo = 0.0; // requested reporting window
    double window_hi = 0.0;
    double truncation_bound = 0.0;
    uint64_t n_convolutions = 0;

    double mass_in(double a, double b) const; // sum over grid points in (a, b]
};

LatticeTable renewal_lattice_oracle(const model::TiltedLaw& z, double h,
                                    double window_lo, double window_hi);

} // namespace prw::renewal
