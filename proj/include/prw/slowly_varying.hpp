#pragma once

#include <string>
#include <vector>

#include "prw/errors.hpp"

namespace prw::sv {

enum class Family { constant, log_power, iterated_log, oscillating };

// A member of the slowly varying catalog. All evaluation happens in the log
// domain, ell(u) = L(e^u), so arguments like x = e^400 never overflow.
//
//   constant       L(x) = c
//   log_power      L(x) = c * (e + log+ x)^beta,  beta > -1
//   iterated_log   L(x) = c * log(e + log+ x)
//   oscillating    L(x) = exp(sin(sqrt(log x))) for x >= 1, frozen at L(1) below
struct SlowlyVaryingSpec {
    Family family = Family::constant;
    double c = 1.0;
    double beta = 0.0;

    void validate() const;
    double domain_floor() const; // smallest x where the family formula applies
};

const char* family_name(Family f);
Family family_from_name(const std::string& name);

// ell(u) = L(e^u); positive and continuous for every real u.
double eval_log(const SlowlyVaryingSpec& sv, double u);

// d/du log ell(u) (one-sided at kinks; only queried away from them).
double log_deriv(const SlowlyVaryingSpec& sv, double u);

// Smallest point beyond which u -> -alpha*u + log ell(u) is nonincreasing,
// or -infinity when it is nonincreasing everywhere. Tail envelopes use this
// to switch from a scanned running minimum to the raw formula.
double monotone_from(const SlowlyVaryingSpec& sv, double alpha);

struct DeHaanValue {
    double x0;
    double u;       // integral runs over [log x0, u]
    double value;
    double abs_tol; // tolerance the value honors
};

// Integral of ell over [log x0, u]; closed form where the family has one,
// adaptive Simpson otherwise. Requires x0 > 0 and u >= log x0.
DeHaanValue tilde_log(const SlowlyVaryingSpec& sv, double x0, double u);

// (tilde(u + log lambda) - tilde(u)) / ell(u); tends to log lambda.
double dehaan_ratio(const SlowlyVaryingSpec& sv, double lambda, double u);

// integral_{x_lo}^{e^u} t^{alpha-1} L(t) dt, divided by alpha^{-1} e^{alpha u}
// ell(u); tends to 1. Computed on the shifted log scale to avoid overflow.
double karamata_ratio(const SlowlyVaryingSpec& sv, double alpha, double x_lo,
                      double u);

struct PotterReport {
    double a_full;   // smallest admissible constant on the full grid
    double a_prefix; // same over the first half of the grid
    bool grew;       // widening the grid increased the constant
};

// Smallest A >= 1 with L(e^v)/L(e^u) <= A * exp(delta |v - u|) over all grid
// pairs, plus the same constant on the leading half so growth is visible.
PotterReport potter_check(const SlowlyVaryingSpec& sv, double delta,
                          const std::vector<double>& u_grid);

} // namespace prw::sv
