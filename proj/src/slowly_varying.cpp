#include "prw/slowly_varying.hpp"

#include <cmath>
#include <limits>

#include "prw/numerics.hpp"

namespace prw::sv {

namespace {

constexpr double kE = 2.718281828459045;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Primitive F(v) = integral of ell over [0, v] for the closed-form families.
// Below 0 every ell is constant, so F extends linearly.
double primitive(const SlowlyVaryingSpec& sv, double v) {
    if (v <= 0.0) return eval_log(sv, 0.0) * v;
    switch (sv.family) {
        case Family::constant:
            return sv.c * v;
        case Family::log_power: {
            const double b1 = sv.beta + 1.0;
            return sv.c * (std::pow(kE + v, b1) - std::pow(kE, b1)) / b1;
        }
        case Family::iterated_log:
            return sv.c * ((kE + v) * std::log(kE + v) - (kE + v));
        case Family::oscillating:
            throw Error("no closed primitive for the oscillating family");
    }
    throw Error("unreachable");
}

} // namespace

void SlowlyVaryingSpec::validate() const {
    if (!(c > 0.0)) throw PreconditionError("slowly varying family: c must be > 0");
    if (family == Family::log_power && !(beta > -1.0))
        throw PreconditionError("slowly varying family: beta must be > -1");
}

double SlowlyVaryingSpec::domain_floor() const {
    return family == Family::constant ? 0.0 : 1.0;
}

const char* family_name(Family f) {
    switch (f) {
        case Family::constant: return "constant";
        case Family::log_power: return "log_power";
        case Family::iterated_log: return "iterated_log";
        case Family::oscillating: return "oscillating";
    }
    return "?";
}

Family family_from_name(const std::string& name) {
    if (name == "constant") return Family::constant;
    if (name == "log_power") return Family::log_power;
    if (name == "iterated_log") return Family::iterated_log;
    if (name == "oscillating") return Family::oscillating;
    throw SchemaError("unknown slowly varying family '" + name + "'");
}

double eval_log(const SlowlyVaryingSpec& sv, double u) {
    const double up = u > 0.0 ? u : 0.0;
    switch (sv.family) {
        case Family::constant: return sv.c;
        case Family::log_power: return sv.c * std::pow(kE + up, sv.beta);
        case Family::iterated_log: return sv.c * std::log(kE + up);
        case Family::oscillating:
            return u <= 0.0 ? 1.0 : std::exp(std::sin(std::sqrt(u)));
    }
    throw Error("unreachable");
}

double log_deriv(const SlowlyVaryingSpec& sv, double u) {
    if (u <= 0.0) return 0.0;
    switch (sv.family) {
        case Family::constant: return 0.0;
        case Family::log_power: return sv.beta / (kE + u);
        case Family::iterated_log: return 1.0 / ((kE + u) * std::log(kE + u));
        case Family::oscillating: {
            const double w = std::sqrt(u);
            return std::cos(w) / (2.0 * w);
        }
    }
    throw Error("unreachable");
}

double monotone_from(const SlowlyVaryingSpec& sv, double alpha) {
    if (!(alpha > 0.0)) throw PreconditionError("monotone_from: alpha must be > 0");
    switch (sv.family) {
        case Family::constant:
            return -kInf;
        case Family::log_power:
            return sv.beta <= 0.0 || sv.beta / alpha <= kE ? -kInf
                                                           : sv.beta / alpha - kE;
        case Family::iterated_log: {
            if (alpha >= 1.0 / kE) return -kInf;
            // solve (e+v) log(e+v) = 1/alpha; left side increases from e.
            double lo = 0.0, hi = 1.0;
            while ((kE + hi) * std::log(kE + hi) < 1.0 / alpha) hi *= 2.0;
            for (int i = 0; i < 200; ++i) {
                const double mid = 0.5 * (lo + hi);
                ((kE + mid) * std::log(kE + mid) < 1.0 / alpha ? lo : hi) = mid;
            }
            return hi;
        }
        case Family::oscillating:
            // beyond max(1/4, 1/(4 alpha^2)): cos(w)/(2w) <= 1/(2w) < alpha
            return std::max(0.25, 0.25 / (alpha * alpha));
    }
    throw Error("unreachable");
}

DeHaanValue tilde_log(const SlowlyVaryingSpec& sv, double x0, double u) {
    sv.validate();
    if (!(x0 > 0.0))
        throw PreconditionError(
            "tilde_log: x0 must be > 0 (integrals from 0 belong to the "
            "perturbation tail, which is integrable at the origin)");
    const double v0 = std::log(x0);
    if (u < v0) throw PreconditionError("tilde_log: empty window, u < log x0");
    if (sv.family != Family::oscillating) {
        const double value = primitive(sv, u) - primitive(sv, v0);
        return {x0, u, value,
                4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(value))};
    }
    // constant piece below 0, quadrature above
    double value = 0.0;
    if (v0 < 0.0) value += (std::min(u, 0.0) - v0) * 1.0;
    if (u > 0.0) {
        const double a = std::max(v0, 0.0);
        value += adaptive_simpson([&](double v) { return eval_log(sv, v); }, a, u);
    }
    return {x0, u, value, 1e-9 * (1.0 + std::abs(value))};
}

double dehaan_ratio(const SlowlyVaryingSpec& sv, double lambda, double u) {
    sv.validate();
    if (!(lambda > 0.0)) throw PreconditionError("dehaan_ratio: lambda must be > 0");
    const double ell = eval_log(sv, u);
    const double v = u + std::log(lambda);
    double num;
    if (sv.family == Family::oscillating) {
        num = adaptive_simpson([&](double w) { return eval_log(sv, w); },
                               std::min(u, v), std::max(u, v));
        if (v < u) num = -num;
    } else {
        num = primitive(sv, v) - primitive(sv, u);
    }
    return num / ell;
}

double karamata_ratio(const SlowlyVaryingSpec& sv, double alpha, double x_lo,
                      double u) {
    sv.validate();
    if (!(alpha > 0.0)) throw PreconditionError("karamata_ratio: alpha must be > 0");
    if (!(x_lo > 0.0)) throw PreconditionError("karamata_ratio: x_lo must be > 0");
    const double w0 = std::log(x_lo) - u;
    if (w0 >= 0.0) throw PreconditionError("karamata_ratio: need e^u > x_lo");
    // integral_{x_lo}^{e^u} t^{alpha-1} L(t) dt = e^{alpha u} *
    // integral_{w0}^{0} e^{alpha w} ell(u+w) dw  (w = log t - u)
    const double integral = adaptive_simpson(
        [&](double w) { return std::exp(alpha * w) * eval_log(sv, u + w); }, w0,
        0.0);
    return alpha * integral / eval_log(sv, u);
}

PotterReport potter_check(const SlowlyVaryingSpec& sv, double delta,
                          const std::vector<double>& u_grid) {
    sv.validate();
    if (!(delta > 0.0)) throw PreconditionError("potter_check: delta must be > 0");
    if (u_grid.size() < 2)
        throw PreconditionError("potter_check: need at least two grid points");
    std::vector<double> ell(u_grid.size());
    for (size_t i = 0; i < u_grid.size(); ++i) ell[i] = eval_log(sv, u_grid[i]);
    auto constant_over = [&](size_t n) {
        double a = 1.0;
        for (size_t i = 0; i < n; ++i)
            for (size_t j = i + 1; j < n; ++j) {
                const double ratio = ell[i] > ell[j] ? ell[i] / ell[j] : ell[j] / ell[i];
                const double bound = std::exp(delta * std::abs(u_grid[j] - u_grid[i]));
                a = std::max(a, ratio / bound);
            }
        return a;
    };
    const double a_full = constant_over(u_grid.size());
    const double a_prefix = constant_over((u_grid.size() + 1) / 2);
    return {a_full, a_prefix, a_full > a_prefix * (1.0 + 1e-12)};
}

} // namespace prw::sv
