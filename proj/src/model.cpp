#include "prw/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "prw/numerics.hpp"
#include "prw/parallel.hpp"

namespace prw::model {

namespace {

constexpr double kE = 2.718281828459045;

// True when |x| is within 1e-9/q^2 of a fraction p/q with q <= 1e6. Any
// fraction that close is a continued-fraction convergent (everything within
// 1/(2q^2) is), so walking the convergents decides the question exactly.
// A ratio that is rational in exact arithmetic lands within ~1e-16 of its
// fraction; a badly approximable irrational such as 1/sqrt(2) never comes
// closer than ~0.4/q^2, so the window separates the two cleanly.
bool near_rational(double x) {
    const double t = std::fabs(x);
    if (!(t > 0.0) || !std::isfinite(t)) return true;
    const double q_cap = 1e6;
    double h_prev = 1.0, h = std::floor(t);
    double k_prev = 0.0, k = 1.0;
    double frac = t - std::floor(t);
    for (int it = 0; it < 64; ++it) {
        if (std::fabs(t - h / k) <= 1e-9 / (k * k)) return true;
        if (frac < 1e-15) return false; // expansion terminated beyond the cap
        const double next = 1.0 / frac;
        const double a = std::floor(next);
        frac = next - a;
        const double h_new = a * h + h_prev;
        const double k_new = a * k + k_prev;
        if (k_new > q_cap) return false;
        h_prev = h;
        k_prev = k;
        h = h_new;
        k = k_new;
    }
    return false;
}

void require_finite_param(double v, const char* name) {
    if (!std::isfinite(v))
        throw SchemaError(std::string(name) + " must be finite");
}

} // namespace

// ---------------------------------------------------------------------------
// FactorLawSpec
// ---------------------------------------------------------------------------

void FactorLawSpec::validate() const {
    if (family == FactorFamily::lognormal) {
        require_finite_param(m, "lognormal m");
        require_finite_param(s2, "lognormal s2");
        if (!(s2 > 0.0))
            throw SchemaError("lognormal s2 must be positive");
        return;
    }
    require_finite_param(u1, "two_point u1");
    require_finite_param(u2, "two_point u2");
    require_finite_param(p, "two_point p");
    if (!(p > 0.0 && p < 1.0))
        throw SchemaError("two_point p must lie strictly inside (0,1)");
    if (u1 == u2)
        throw SchemaError("two_point support points must differ");
    if (u1 == 0.0 || u2 == 0.0)
        throw SchemaError("two_point support containing 0 is arithmetic");
    if (near_rational(u1 / u2))
        throw SchemaError("two_point ratio u1/u2 is rational or indistinguishable "
                          "from a fraction with denominator <= 1e6; the support "
                          "must generate a dense subgroup");
}

double FactorLawSpec::cumulant(double s) const {
    if (family == FactorFamily::lognormal) return m * s + 0.5 * s2 * s * s;
    const double e1 = s * u1;
    const double e2 = s * u2;
    const double top = std::max(e1, e2);
    return top + std::log(p * std::exp(e1 - top) + (1.0 - p) * std::exp(e2 - top));
}

double FactorLawSpec::cumulant_deriv(double s) const {
    if (family == FactorFamily::lognormal) return m + s2 * s;
    const double e1 = s * u1;
    const double e2 = s * u2;
    const double top = std::max(e1, e2);
    const double w1 = p * std::exp(e1 - top);
    const double w2 = (1.0 - p) * std::exp(e2 - top);
    return (w1 * u1 + w2 * u2) / (w1 + w2);
}

double FactorLawSpec::mean_log() const {
    return family == FactorFamily::lognormal ? m : p * u1 + (1.0 - p) * u2;
}

double FactorLawSpec::sample_log(RngStream& rng) const {
    if (family == FactorFamily::lognormal)
        return rng.next_normal(m, std::sqrt(s2));
    return rng.next_unit() < p ? u1 : u2;
}

// ---------------------------------------------------------------------------
// Critical exponent and tilted mean
// ---------------------------------------------------------------------------

double solve_alpha(const FactorLawSpec& a) {
    a.validate();
    if (!(a.cumulant_deriv(0.0) < 0.0))
        throw NoRootError("E log A >= 0: the walk does not drift down, so the "
                          "cumulant has no positive root");
    double hi = 1.0;
    while (!(a.cumulant(hi) > 0.0)) {
        hi *= 2.0;
        if (hi > 1e6)
            throw NoRootError("cumulant stays nonpositive out to s = 1e6; "
                              "no critical exponent exists for this factor law");
    }
    // kappa is convex with kappa(0) = 0 and kappa < 0 on (0, alpha), so the
    // sign of kappa(mid) alone steers the bisection.
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (a.cumulant(mid) <= 0.0 ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 50; ++it) {
        const double k = a.cumulant(x);
        if (std::fabs(k) <= 1e-12) return x;
        const double step = k / a.cumulant_deriv(x);
        double next = x - step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        (a.cumulant(next) <= 0.0 ? lo : hi) = next;
        x = next;
    }
    if (std::fabs(a.cumulant(x)) <= 1e-12) return x;
    throw NoRootError("critical exponent refinement did not reach |kappa| <= 1e-12");
}

double compute_rho(const FactorLawSpec& a, double alpha) {
    const double k = a.cumulant(alpha);
    if (!(std::fabs(k) <= 1e-9))
        throw PreconditionError("compute_rho requires E A^alpha = 1 "
                                "(|kappa(alpha)| <= 1e-9)");
    const double rho = a.cumulant_deriv(alpha) * std::exp(k);
    if (!(rho > 0.0))
        throw PreconditionError("tilted mean is not positive at the supplied "
                                "exponent");
    return rho;
}

TiltedLaw make_tilted(const FactorLawSpec& a, double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw PreconditionError("tilt exponent must be positive and finite");
    TiltedLaw z;
    z.kind = a.family;
    z.base = a;
    z.alpha = alpha;
    const double ea = std::exp(a.cumulant(alpha));
    z.ez = a.cumulant_deriv(alpha) * ea; // same expression as compute_rho
    if (a.family == FactorFamily::lognormal) {
        z.mean = a.m + alpha * a.s2;
        z.var = a.s2;
        z.ez2 = a.s2 + z.mean * z.mean;
        z.strongly_non_lattice = true;
        return z;
    }
    const double w1_raw = a.p * std::exp(alpha * a.u1);
    const double w2_raw = (1.0 - a.p) * std::exp(alpha * a.u2);
    z.u1 = a.u1;
    z.u2 = a.u2;
    z.w1 = w1_raw / (w1_raw + w2_raw);
    z.ez2 = z.w1 * a.u1 * a.u1 + (1.0 - z.w1) * a.u2 * a.u2;
    z.strongly_non_lattice = false;
    return z;
}

double TiltedLaw::sample(RngStream& rng) const {
    if (kind == FactorFamily::lognormal)
        return rng.next_normal(mean, std::sqrt(var));
    return rng.next_unit() < w1 ? u1 : u2;
}

// ---------------------------------------------------------------------------
// PerturbationTailSpec
// ---------------------------------------------------------------------------

double PerturbationTailSpec::g(double v) const {
    return -alpha * v + std::log(sv::eval_log(sv, v));
}

void PerturbationTailSpec::finalize() {
    if (kind == TailKind::uniform) {
        require_finite_param(lo, "uniform lo");
        require_finite_param(hi, "uniform hi");
        if (!(0.0 < lo && lo < hi))
            throw SchemaError("uniform support needs 0 < lo < hi");
        u_floor = std::log(lo);
        return;
    }
    if (kind == TailKind::point) {
        require_finite_param(b0, "point b0");
        if (!(b0 > 0.0)) throw SchemaError("point mass position must be positive");
        u_floor = std::log(b0);
        return;
    }
    require_finite_param(alpha, "tail alpha");
    require_finite_param(x_floor, "tail x_floor");
    if (!(alpha > 0.0)) throw SchemaError("tail alpha must be positive");
    if (!(x_floor > 0.0)) throw SchemaError("tail x_floor must be positive");
    sv.validate();
    u_floor = std::log(x_floor);

    // Collect every point where a monotone segment of g can begin or end:
    // the floor itself, the clamp kink at 0, and interior critical points.
    // With all boundaries present, the running infimum of g over [u_floor, v]
    // is the minimum of g at the boundaries up to v and g(v) itself.
    cand.clear();
    cand.push_back(u_floor);
    const bool has_kink = sv.family != sv::Family::constant;
    if (has_kink && u_floor < 0.0) cand.push_back(0.0);
    switch (sv.family) {
    case sv::Family::constant:
        break;
    case sv::Family::log_power:
        if (sv.beta > 0.0) {
            const double w = sv.beta / alpha - kE;
            if (w > std::max(u_floor, 0.0)) cand.push_back(w);
        }
        break;
    case sv::Family::iterated_log:
        if (alpha < 1.0 / kE) {
            // g' = 0 where (e+w)log(e+w) = 1/alpha; the left side increases.
            double blo = 0.0, bhi = 1.0;
            while ((kE + bhi) * std::log(kE + bhi) < 1.0 / alpha) bhi *= 2.0;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (blo + bhi);
                ((kE + mid) * std::log(kE + mid) < 1.0 / alpha ? blo : bhi) = mid;
            }
            const double w = 0.5 * (blo + bhi);
            if (w > std::max(u_floor, 0.0)) cand.push_back(w);
        }
        break;
    case sv::Family::oscillating: {
        // Critical points satisfy cos(t) = 2*alpha*t with w = t^2; none exist
        // past t = 1/(2*alpha). Scan for sign changes, then bisect each.
        const double t_max = 0.5 / alpha;
        const double step = std::min(0.05, t_max / 8.0);
        double t_prev = step;
        double d_prev = std::cos(t_prev) - 2.0 * alpha * t_prev;
        for (double t = 2.0 * step; t <= t_max + step; t += step) {
            const double d = std::cos(t) - 2.0 * alpha * t;
            if ((d_prev > 0.0) != (d > 0.0)) {
                double blo = t_prev, bhi = t;
                for (int it = 0; it < 100; ++it) {
                    const double mid = 0.5 * (blo + bhi);
                    const double dm = std::cos(mid) - 2.0 * alpha * mid;
                    ((dm > 0.0) == (d_prev > 0.0) ? blo : bhi) = mid;
                }
                const double w = 0.25 * (blo + bhi) * (blo + bhi);
                if (w > std::max(u_floor, 0.0)) cand.push_back(w);
            }
            t_prev = t;
            d_prev = d;
        }
        break;
    }
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    cand_min.resize(cand.size());
    double run = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < cand.size(); ++i) {
        run = std::min(run, g(cand[i]));
        cand_min[i] = run;
    }

    // Past w_end the raw formula e^{-alpha v} ell(v) is itself the envelope:
    // g decreases there and already sits below 0 and every earlier minimum.
    double v0 = std::max(cand.back(), u_floor);
    const double mono = sv::monotone_from(sv, alpha);
    if (std::isfinite(mono)) v0 = std::max(v0, mono);
    const double target = std::min(0.0, cand_min.back());
    if (g(v0) <= target) {
        w_end = v0;
        return;
    }
    double lo_b = v0, hi_b = v0 + 1.0;
    int guard = 0;
    while (g(hi_b) > target) {
        lo_b = hi_b;
        hi_b = v0 + 2.0 * (hi_b - v0);
        if (++guard > 200)
            throw StabilityError("tail envelope never rejoins the raw formula");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo_b + hi_b);
        (g(mid) > target ? lo_b : hi_b) = mid;
    }
    w_end = hi_b;
}

double PerturbationTailSpec::envelope_inf(double u) const {
    const auto it = std::upper_bound(cand.begin(), cand.end(), u);
    const size_t idx = static_cast<size_t>(it - cand.begin()) - 1;
    return std::min(cand_min[idx], g(u));
}

double PerturbationTailSpec::log_tail_log(double u) const {
    switch (kind) {
    case TailKind::uniform:
        if (u <= u_floor) return 0.0;
        return std::log(tail_log(u));
    case TailKind::point:
        return u < u_floor ? 0.0 : -std::numeric_limits<double>::infinity();
    case TailKind::reg_var:
    default:
        if (u <= u_floor) return 0.0;
        return std::min(0.0, envelope_inf(u));
    }
}

double PerturbationTailSpec::tail_log(double u) const {
    if (kind == TailKind::uniform) {
        const double x = std::exp(u);
        if (x <= lo) return 1.0;
        if (x >= hi) return 0.0;
        return (hi - x) / (hi - lo);
    }
    return std::exp(log_tail_log(u));
}

double PerturbationTailSpec::tail(double x) const {
    if (!(x > 0.0)) return 1.0;
    switch (kind) {
    case TailKind::uniform:
        if (x <= lo) return 1.0;
        if (x >= hi) return 0.0;
        return (hi - x) / (hi - lo);
    case TailKind::point:
        return x < b0 ? 1.0 : 0.0;
    case TailKind::reg_var:
    default:
        if (x <= x_floor) return 1.0;
        return std::exp(std::min(0.0, envelope_inf(std::log(x))));
    }
}

double PerturbationTailSpec::quantile(double q) const {
    if (!(q > 0.0 && q < 1.0))
        throw PreconditionError("quantile level must lie in (0,1)");
    switch (kind) {
    case TailKind::uniform:
        return hi - q * (hi - lo);
    case TailKind::point:
        return b0;
    case TailKind::reg_var:
    default:
        break;
    }
    const double tplus = std::exp(std::min(0.0, g(u_floor)));
    if (q >= tplus) return x_floor;
    if (sv.family == sv::Family::constant) {
        // T(e^v) = min(1, c e^{-alpha v}) beyond the floor
        return std::exp((std::log(sv.c) - std::log(q)) / alpha);
    }
    double blo = u_floor;
    double bhi = std::max(w_end, u_floor + 1.0);
    int guard = 0;
    while (tail_log(bhi) > q) {
        bhi = u_floor + 2.0 * (bhi - u_floor);
        if (++guard > 80)
            throw StabilityError("quantile bracket expansion failed");
    }
    for (int it = 0; it < 200 && bhi - blo > 1e-12 * std::max(1.0, std::fabs(bhi));
         ++it) {
        const double mid = 0.5 * (blo + bhi);
        (tail_log(mid) <= q ? bhi : blo) = mid;
    }
    return std::exp(bhi);
}

double PerturbationTailSpec::ell_induced(double u) const {
    if (!heavy())
        throw GateError("induced slowly varying part is defined for the "
                        "regularly varying kind only");
    if (u <= u_floor) return std::exp(alpha * u);
    if (u >= w_end) return sv::eval_log(sv, u);
    return std::exp(alpha * u + std::min(0.0, envelope_inf(u)));
}

namespace {

// Integral of exp(w*v + log T(e^v)) over [a, b], split at envelope joints so
// each adaptive pass sees a smooth integrand.
double tail_weighted_integral(const PerturbationTailSpec& b, double w, double a,
                              double hi) {
    if (!(hi > a)) return 0.0;
    auto f = [&b, w](double v) { return std::exp(w * v + b.log_tail_log(v)); };
    std::vector<double> nodes;
    nodes.push_back(a);
    for (const double c : b.cand)
        if (c > a && c < hi) nodes.push_back(c);
    if (b.w_end > a && b.w_end < hi) nodes.push_back(b.w_end);
    nodes.push_back(hi);
    std::sort(nodes.begin(), nodes.end());
    double total = 0.0;
    for (size_t i = 0; i + 1 < nodes.size(); ++i)
        total += adaptive_simpson(f, nodes[i], nodes[i + 1]);
    return total;
}

} // namespace

double PerturbationTailSpec::tilde0(double u) const {
    if (!heavy())
        throw GateError("the de Haan integral from 0 requires the regularly "
                        "varying kind; bounded perturbations have a finite "
                        "moment of order alpha instead");
    double value = std::exp(alpha * std::min(u, u_floor)) / alpha;
    if (u <= u_floor) return value;
    const double vend = std::min(u, w_end);
    value += tail_weighted_integral(*this, alpha, u_floor, vend);
    if (u > w_end) value += sv::tilde_log(sv, std::exp(w_end), u).value;
    require_finite(value, "tilde0");
    return value;
}

double PerturbationTailSpec::x_star() const {
    if (!heavy())
        throw GateError("x_star is defined for the regularly varying kind only");
    return std::exp(w_end);
}

double PerturbationTailSpec::truncated_moment(double r, double x) const {
    if (!heavy())
        throw GateError("truncated moments are computed against the regularly "
                        "varying index");
    if (!(x > 0.0) || !std::isfinite(x))
        throw PreconditionError("truncation point must be positive and finite");
    const double s = alpha + r;
    if (!(s > 0.0))
        throw PreconditionError("truncated moment order alpha + r must be positive");
    const double u = std::log(x);
    double value = std::exp(s * std::min(u, u_floor));
    if (u > u_floor) value += s * tail_weighted_integral(*this, s, u_floor, u);
    value -= std::pow(x, s) * tail(x);
    require_finite(value, "truncated_moment");
    return value;
}

double PerturbationTailSpec::moment(double s) const {
    switch (kind) {
    case TailKind::point:
        return std::pow(b0, s);
    case TailKind::uniform:
        if (std::fabs(s + 1.0) < 1e-12) return std::log(hi / lo) / (hi - lo);
        return (std::pow(hi, s + 1.0) - std::pow(lo, s + 1.0)) /
               ((hi - lo) * (s + 1.0));
    case TailKind::reg_var:
    default:
        break;
    }
    if (!(s < alpha))
        throw PreconditionError("E B^s diverges at and above the tail index");
    double value = std::exp(s * u_floor);
    if (s == 0.0) return value;
    const double width = 8.0 / (alpha - s);
    double seg_lo = u_floor;
    double seg_hi = std::max(w_end, u_floor) + width;
    for (int k = 0; k < 1000; ++k) {
        const double seg = s * tail_weighted_integral(*this, s, seg_lo, seg_hi);
        value += seg;
        if (std::fabs(seg) <= 1e-13 * std::fabs(value)) {
            require_finite(value, "moment");
            return value;
        }
        seg_lo = seg_hi;
        seg_hi += width;
    }
    throw QuadratureError("E B^s tail integral did not converge");
}

// ---------------------------------------------------------------------------
// ModelSpec
// ---------------------------------------------------------------------------

void ModelSpec::finalize() {
    a.validate();
    b.finalize();
    e_log_a = a.mean_log();
    if (dependence == Dependence::breiman && !b.heavy())
        throw SchemaError("breiman dependence pairs A with a Pareto factor and "
                          "needs the regularly varying perturbation kind");
    if (b.heavy()) {
        const double k_at_b = a.cumulant(b.alpha);
        if (k_at_b > 1e-6)
            throw PreconditionError("E A^alpha exceeds 1 at the declared tail "
                                    "index; the supremum has a heavier tail than "
                                    "the perturbation and this regime is not "
                                    "supported");
        if (k_at_b < -1e-6) {
            regime = Regime::subcritical;
            alpha = b.alpha;
            ea_alpha = std::exp(k_at_b);
            rho = 0.0;
            return;
        }
        // Critical: re-solve so downstream identities hold to 1e-12 even when
        // the declared parameters are rounded.
        alpha = solve_alpha(a);
        if (std::fabs(alpha - b.alpha) > 1e-6)
            throw PreconditionError("factor law criticality disagrees with the "
                                    "declared tail index");
    } else {
        alpha = solve_alpha(a);
    }
    regime = Regime::critical;
    ea_alpha = std::exp(a.cumulant(alpha));
    rho = compute_rho(a, alpha);
    tilted = make_tilted(a, alpha);
}

std::pair<double, double> ModelSpec::sample_pair(RngStream& rng,
                                                 double b_scale) const {
    const double a_val = std::exp(a.sample_log(rng));
    const double unit = rng.next_unit();
    double b_val;
    if (dependence == Dependence::breiman) {
        // b = a * b0 with b0 drawn from the declared perturbation tail
        const double b0_val = b.sv.family == sv::Family::constant &&
                                      b.alpha == 1.0 && b.sv.c == 1.0 &&
                                      b.x_floor == 1.0
                                  ? 1.0 / unit
                                  : b.quantile(unit);
        b_val = a_val * b0_val;
    } else if (b.kind == TailKind::reg_var &&
               b.sv.family == sv::Family::constant && b.alpha == 1.0 &&
               b.sv.c == 1.0 && b.x_floor == 1.0) {
        b_val = 1.0 / unit; // Pareto(1,1) fast path
    } else {
        b_val = b.quantile(unit);
    }
    return {a_val, b_val * b_scale};
}

// ---------------------------------------------------------------------------
// Joint moment diagnostic
// ---------------------------------------------------------------------------

ArbEstimate check_arb(const ModelSpec& model, double eta, uint64_t n,
                      uint64_t seed, unsigned workers) {
    if (!(eta > 0.0 && eta < model.alpha))
        throw PreconditionError("eta must lie strictly between 0 and alpha");
    if (n == 0) throw PreconditionError("joint moment check needs draws");
    struct Acc {
        double sum = 0.0;
        double sumsq = 0.0;
    };
    const uint64_t n_chunks = chunk_count(n);
    const double ce = model.alpha - eta;
    auto partials = run_chunks<Acc>(n_chunks, workers, [&](uint64_t c) {
        RngStream rng(seed, kPurposeArb, c);
        Acc acc;
        const uint64_t k = chunk_size(c, n);
        for (uint64_t i = 0; i < k; ++i) {
            const auto [a_val, b_val] = model.sample_pair(rng);
            const double x = std::pow(a_val, eta) * std::pow(b_val, ce);
            acc.sum += x;
            acc.sumsq += x * x;
        }
        return acc;
    });
    auto reduce = [&](uint64_t upto, double& est, double& se) {
        double sum = 0.0, sumsq = 0.0;
        uint64_t count = 0;
        for (uint64_t c = 0; c < upto; ++c) {
            sum += partials[c].sum;
            sumsq += partials[c].sumsq;
            count += chunk_size(c, n);
        }
        est = sum / static_cast<double>(count);
        const double var =
            count > 1
                ? std::max(0.0, (sumsq - static_cast<double>(count) * est * est) /
                                    static_cast<double>(count - 1))
                : 0.0;
        se = std::sqrt(var / static_cast<double>(count));
    };
    ArbEstimate out;
    out.eta = eta;
    out.n = n;
    reduce(n_chunks, out.estimate, out.stderror);
    reduce((n_chunks + 1) / 2, out.estimate_half, out.stderror_half);
    const double combined = std::sqrt(out.stderror * out.stderror +
                                      out.stderror_half * out.stderror_half);
    out.stable =
        std::fabs(out.estimate - out.estimate_half) < 3.0 * combined + 1e-300;
    return out;
}

} // namespace prw::model
