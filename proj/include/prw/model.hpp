#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "prw/errors.hpp"
#include "prw/rng.hpp"
#include "prw/slowly_varying.hpp"

namespace prw::model {

// ---------------------------------------------------------------------------
// Factor law: the distribution of A through log A
// ---------------------------------------------------------------------------

enum class FactorFamily { lognormal, two_point };

// Law of the multiplicative factor A >= 0, described through log A.
//
//   lognormal    log A ~ normal(m, s2)
//   two_point    log A in {u1, u2} with P(log A = u1) = p
//
// Both admit a closed-form cumulant kappa(s) = log E A^s, finite for every
// real s. The two-point support must have an irrational ratio u1/u2 so the
// law is non-arithmetic; validate() enforces this with a continued-fraction
// test (see model.cpp).
struct FactorLawSpec {
    FactorFamily family = FactorFamily::lognormal;
    double m = 0.0;
    double s2 = 1.0;
    double u1 = 0.0;
    double u2 = 0.0;
    double p = 0.5;

    void validate() const;
    double cumulant(double s) const;       // log E A^s
    double cumulant_deriv(double s) const; // d/ds log E A^s
    double mean_log() const;               // E log A
    double sample_log(RngStream& rng) const;
    bool has_density() const { return family == FactorFamily::lognormal; }
};

// Unique alpha > 0 with E A^alpha = 1, found by bracketing plus Newton
// refinement on the closed-form cumulant, |kappa(alpha)| <= 1e-12.
// Throws NoRootError when kappa'(0) >= 0 or kappa stays negative.
double solve_alpha(const FactorLawSpec& a);

// rho = kappa'(alpha) * E A^alpha, the mean of the tilted increment.
// Requires |kappa(alpha)| <= 1e-9 and rho > 0.
double compute_rho(const FactorLawSpec& a, double alpha);

// ---------------------------------------------------------------------------
// Tilted increment law Z, with P(Z in .) = E A^alpha 1{log A in .}
// ---------------------------------------------------------------------------

// Exact form of the tilt for the catalog:
//   lognormal(m, s2)  ->  Z ~ normal(m + alpha*s2, s2)
//   two_point         ->  Z on {u1, u2} with masses p*e^{alpha*u1},
//                         (1-p)*e^{alpha*u2}, normalized by E A^alpha
// E e^{-alpha Z} = 1, which makes e^{-40} the scale of everything the walk
// does 40/alpha below its running level; path truncation relies on this.
struct TiltedLaw {
    FactorFamily kind = FactorFamily::lognormal;
    FactorLawSpec base;
    double alpha = 0.0;
    double mean = 0.0; // normal parameters
    double var = 0.0;
    double u1 = 0.0; // two-point support and first mass
    double u2 = 0.0;
    double w1 = 0.0;
    double ez = 0.0;
    double ez2 = 0.0;
    bool strongly_non_lattice = false;

    double cumulant(double s) const { return base.cumulant(alpha + s); }
    double sample(RngStream& rng) const;
};

TiltedLaw make_tilted(const FactorLawSpec& a, double alpha);

// ---------------------------------------------------------------------------
// Perturbation B through its tail T(x) = P(B > x)
// ---------------------------------------------------------------------------

enum class TailKind { reg_var, uniform, point };

// reg_var builds the tail from (alpha, L): T(x) = 1 up to x_floor and the
// monotone envelope of min(1, x^{-alpha} L(x)) beyond it. The envelope is
// exact: finalize() collects every boundary of a monotone segment of
// g(v) = -alpha*v + log ell(v), so the running infimum is a minimum over
// precomputed candidates plus the current point. uniform and point are
// bounded perturbations with closed-form tails (finite moment of order
// alpha; they gate out of the heavy-tail operations).
struct PerturbationTailSpec {
    TailKind kind = TailKind::reg_var;
    double alpha = 1.0;
    sv::SlowlyVaryingSpec sv;
    double x_floor = 1.0;
    double lo = 1.0; // uniform support
    double hi = 2.0;
    double b0 = 1.0; // point position

    // derived by finalize()
    double u_floor = 0.0;   // log of the floor of the support
    double w_end = 0.0;     // beyond this log-point the envelope is inactive
    std::vector<double> cand;       // monotone-segment boundaries of g
    std::vector<double> cand_min;   // prefix minima of g over cand

    void finalize();
    bool heavy() const { return kind == TailKind::reg_var; }

    double tail(double x) const;     // T(x), nonincreasing, right-continuous
    double tail_log(double u) const; // T(e^u)
    double log_tail_log(double u) const; // log T(e^u), exact in log domain
    double quantile(double q) const; // inf{x : T(x) <= q}, q in (0,1)

    // Induced slowly varying part L_B(e^u) = e^{alpha*u} T(e^u); equals the
    // declared ell beyond w_end. Heavy kind only.
    double ell_induced(double u) const;
    // De Haan integral of the induced tail from 0: L_B~(0, e^u).
    double tilde0(double u) const;
    // First log-point x with T(x) < 1 strictly beyond which the envelope
    // returns the raw formula; exp(w_end).
    double x_star() const;

    // E B^{alpha+r} 1{B <= x} = (alpha+r) int_0^x t^{alpha+r-1} T(t) dt
    //                           - x^{alpha+r} T(x)
    double truncated_moment(double r, double x) const;
    // E B^s; requires s < alpha for the heavy kind.
    double moment(double s) const;

  private:
    double envelope_inf(double u) const; // inf of g over [u_floor, u]
    double g(double v) const;
};

// ---------------------------------------------------------------------------
// Full model of (A, B)
// ---------------------------------------------------------------------------

enum class Dependence { independent, breiman };
enum class Regime { critical, subcritical };

struct ModelSpec {
    FactorLawSpec a;
    PerturbationTailSpec b;
    Dependence dependence = Dependence::independent;

    // derived by finalize()
    Regime regime = Regime::critical;
    double alpha = 0.0;    // tail index governing R
    double rho = 0.0;      // tilted mean; critical regime only
    double e_log_a = 0.0;  // E log A
    double ea_alpha = 0.0; // E A^alpha at the governing index
    TiltedLaw tilted;      // critical regime only

    void finalize();
    bool critical() const { return regime == Regime::critical; }

    // One draw of (A, B). Fixed uniform consumption per call and family:
    // the A draw comes first, then one uniform for B. b_scale multiplies
    // the B draw, which keeps ensembles coupled exactly across scalings.
    std::pair<double, double> sample_pair(RngStream& rng,
                                          double b_scale = 1.0) const;
};

// ---------------------------------------------------------------------------
// Joint moment diagnostic E A^eta B_+^{alpha-eta}
// ---------------------------------------------------------------------------

struct ArbEstimate {
    double eta = 0.0;
    double estimate = 0.0;
    double stderror = 0.0;
    double estimate_half = 0.0; // over the leading half of the draws
    double stderror_half = 0.0;
    uint64_t n = 0;
    bool stable = false; // halves agree within 3 combined standard errors
};

// Monte Carlo estimate of E A^eta B_+^{alpha-eta} with a split-sample
// stability diagnostic. Divergence shows as instability, never as a throw.
ArbEstimate check_arb(const ModelSpec& model, double eta, uint64_t n,
                      uint64_t seed, unsigned workers);

} // namespace prw::model
