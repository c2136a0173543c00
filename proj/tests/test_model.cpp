#include <doctest.h>

#include <cmath>
#include <vector>

#include "prw/model.hpp"
#include "prw/rng.hpp"

using namespace prw;
using model::Dependence;
using model::FactorFamily;
using model::FactorLawSpec;
using model::ModelSpec;
using model::PerturbationTailSpec;
using model::Regime;
using model::TailKind;

namespace {

// log A ~ normal(-1, 2): the cumulant -s + s^2 vanishes at 1 and the tilted
// increment is normal(1, 2)
FactorLawSpec lognormal(double m, double s2) {
    FactorLawSpec a;
    a.family = FactorFamily::lognormal;
    a.m = m;
    a.s2 = s2;
    return a;
}

FactorLawSpec two_point(double u1, double u2, double p) {
    FactorLawSpec a;
    a.family = FactorFamily::two_point;
    a.u1 = u1;
    a.u2 = u2;
    a.p = p;
    return a;
}

constexpr double kSqrt2 = 1.4142135623730951;
// root of p*e^s + (1-p)*e^{-sqrt2*s} = 1 at s = 1
constexpr double kPStar = 0.3057910227454883;

PerturbationTailSpec pareto11() {
    PerturbationTailSpec b;
    b.kind = TailKind::reg_var;
    b.alpha = 1.0;
    b.sv.family = sv::Family::constant;
    b.sv.c = 1.0;
    b.x_floor = 1.0;
    b.finalize();
    return b;
}

ModelSpec canonical() {
    ModelSpec m;
    m.a = lognormal(-1.0, 2.0);
    m.b = pareto11();
    m.finalize();
    return m;
}

} // namespace

TEST_CASE("cumulant matches the Gaussian closed form and is convex") {
    const auto a = lognormal(-1.0, 2.0);
    for (double s : {-1.0, 0.0, 0.5, 1.0, 2.0})
        CHECK(a.cumulant(s) == doctest::Approx(-s + s * s).epsilon(1e-14));
    CHECK(a.cumulant_deriv(0.0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(a.mean_log() == -1.0);

    const auto t = two_point(1.0, -kSqrt2, kPStar);
    CHECK(t.mean_log() ==
          doctest::Approx(kPStar - (1.0 - kPStar) * kSqrt2).epsilon(1e-14));
    for (double s : {-0.5, 0.3, 0.9, 1.7}) {
        const double mid = t.cumulant(s);
        const double avg = 0.5 * (t.cumulant(s - 0.2) + t.cumulant(s + 0.2));
        CHECK(mid <= avg + 1e-12);
    }
}

TEST_CASE("solve_alpha finds the cumulant root") {
    CHECK(model::solve_alpha(lognormal(-1.0, 2.0)) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(model::solve_alpha(lognormal(-2.0, 2.0)) ==
          doctest::Approx(2.0).epsilon(1e-12));
    CHECK(model::solve_alpha(lognormal(-0.25, 0.1)) ==
          doctest::Approx(5.0).epsilon(1e-12));
    CHECK(model::solve_alpha(two_point(1.0, -kSqrt2, kPStar)) ==
          doctest::Approx(1.0).epsilon(1e-12));
    // the catalog's rounded weight moves the root by about 1e-7
    CHECK(model::solve_alpha(two_point(1.0, -kSqrt2, 0.305791)) ==
          doctest::Approx(1.0).epsilon(1e-6));
    CHECK_THROWS_AS(model::solve_alpha(lognormal(0.1, 2.0)), NoRootError);
}

TEST_CASE("compute_rho gives the tilted mean and guards its inputs") {
    CHECK(model::compute_rho(lognormal(-1.0, 2.0), 1.0) ==
          doctest::Approx(1.0).epsilon(1e-9));
    const auto t = two_point(1.0, -kSqrt2, kPStar);
    CHECK(model::compute_rho(t, 1.0) ==
          doctest::Approx(0.5925439558325887).epsilon(1e-9));
    CHECK_THROWS_AS(model::compute_rho(lognormal(-1.0, 2.0), 1.5),
                    PreconditionError);
}

TEST_CASE("tilted law carries the exact transformed parameters") {
    const auto z = model::make_tilted(lognormal(-1.0, 2.0), 1.0);
    CHECK(z.kind == FactorFamily::lognormal);
    CHECK(z.mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(z.var == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(z.ez == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(z.ez2 == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(z.strongly_non_lattice);
    // E e^{-alpha Z} = E A^alpha: the tilt inverts exactly
    CHECK(z.cumulant(-1.0) == doctest::Approx(0.0).epsilon(1e-12));

    const auto w = model::make_tilted(two_point(1.0, -kSqrt2, kPStar), 1.0);
    CHECK_FALSE(w.strongly_non_lattice);
    CHECK(w.w1 == doctest::Approx(0.8312261804349674).epsilon(1e-9));
    CHECK(w.ez == doctest::Approx(0.5925439558325887).epsilon(1e-9));
    CHECK(w.ez2 == doctest::Approx(1.1687738195650326).epsilon(1e-9));
}

TEST_CASE("tilted sampling hits the declared moments") {
    const auto z = model::make_tilted(lognormal(-1.0, 2.0), 1.0);
    RngStream rng(99, kPurposeRenewal, 0);
    double sum = 0.0, sumsq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double v = z.sample(rng);
        sum += v;
        sumsq += v * v;
    }
    CHECK(sum / n == doctest::Approx(1.0).epsilon(0.015));
    CHECK(sumsq / n == doctest::Approx(3.0).epsilon(0.03));

    const auto w = model::make_tilted(two_point(1.0, -kSqrt2, kPStar), 1.0);
    RngStream rng2(99, kPurposeRenewal, 1);
    double sum2 = 0.0;
    int off_support = 0;
    for (int i = 0; i < n; ++i) {
        const double v = w.sample(rng2);
        if (v != 1.0 && v != -kSqrt2) ++off_support;
        sum2 += v;
    }
    CHECK(off_support == 0);
    CHECK(sum2 / n == doctest::Approx(w.ez).epsilon(0.02));
}

TEST_CASE("two-point support with a rational ratio is rejected") {
    CHECK_THROWS_AS(two_point(1.0, -2.0, 0.4).validate(), SchemaError);
    CHECK_THROWS_AS(two_point(3.0, -1.5, 0.4).validate(), SchemaError);
    CHECK_NOTHROW(two_point(1.0, -kSqrt2, 0.4).validate());
    CHECK_NOTHROW(two_point(3.141592653589793, -1.0, 0.4).validate());
    CHECK_THROWS_AS(two_point(1.0, -kSqrt2, 1.5).validate(), SchemaError);
}

TEST_CASE("Pareto tail evaluates exactly across the whole log axis") {
    const auto b = pareto11();
    CHECK(b.tail(0.5) == 1.0);
    CHECK(b.tail(1.0) == 1.0);
    CHECK(b.tail(2.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(b.tail_log(10.0) == doctest::Approx(std::exp(-10.0)).epsilon(1e-12));
    // the log-domain form never underflows
    CHECK(b.log_tail_log(700.0) == doctest::Approx(-700.0).epsilon(1e-12));
    CHECK(b.quantile(0.25) == doctest::Approx(4.0).epsilon(1e-12));
    for (double q : {0.9, 0.5, 0.11, 0.003})
        CHECK(b.tail(b.quantile(q)) == doctest::Approx(q).epsilon(1e-9));
    CHECK_THROWS_AS(b.quantile(0.0), PreconditionError);
    CHECK_THROWS_AS(b.quantile(1.0), PreconditionError);
}

TEST_CASE("Pareto induced slowly varying data has closed forms") {
    const auto b = pareto11();
    CHECK(b.ell_induced(0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b.ell_induced(37.0) == doctest::Approx(1.0).epsilon(1e-12));
    // below the floor the tail is 1, so the induced part is e^{alpha u}
    CHECK(b.ell_induced(-2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
    CHECK(b.tilde0(7.0) == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(b.tilde0(400.0) == doctest::Approx(401.0).epsilon(1e-12));
    CHECK(b.x_star() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("truncated moment identity against the Pareto closed form") {
    const auto b = pareto11();
    // E B 1{B <= e^k} = k exactly
    for (double k : {1.0, 3.0, 6.0})
        CHECK(b.truncated_moment(0.0, std::exp(k)) ==
              doctest::Approx(k).epsilon(1e-9));
    CHECK(b.moment(0.5) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(b.moment(0.9) == doctest::Approx(10.0).epsilon(1e-9));
    CHECK_THROWS_AS(b.moment(1.0), PreconditionError);
}

TEST_CASE("log_power tail switches from the cap to the raw formula") {
    PerturbationTailSpec b;
    b.kind = TailKind::reg_var;
    b.alpha = 1.0;
    b.sv.family = sv::Family::log_power;
    b.sv.c = 1.0;
    b.sv.beta = 1.0;
    b.x_floor = 1.0;
    b.finalize();

    const double e = 2.718281828459045;
    CHECK(b.tail(2.0) == 1.0); // L(2)/2 = (e + log 2)/2 > 1 still capped
    CHECK(b.tail(100.0) ==
          doctest::Approx((e + std::log(100.0)) / 100.0).epsilon(1e-12));
    const double xs = b.x_star();
    CHECK(xs > 1.0);
    CHECK(b.tail(xs * 0.999) == 1.0);
    CHECK(b.tail(xs * 1.001) < 1.0);
    double prev = 1.0;
    for (double x = 1.0; x < 1000.0; x *= 1.3) {
        CHECK(b.tail(x) <= prev + 1e-15);
        prev = b.tail(x);
    }
    for (double q : {0.9, 0.4, 0.05})
        CHECK(b.tail(b.quantile(q)) == doctest::Approx(q).epsilon(1e-9));
}

TEST_CASE("oscillating tail envelope is monotone with an interior switch") {
    PerturbationTailSpec b;
    b.kind = TailKind::reg_var;
    b.alpha = 1.0;
    b.sv.family = sv::Family::oscillating;
    b.x_floor = 1.0;
    b.finalize();

    const double xs = b.x_star();
    CHECK(xs > 1.0);
    CHECK(xs < 10.0);
    CHECK(b.tail(xs * 0.999) == 1.0);
    CHECK(b.tail(xs * 1.001) < 1.0);
    double prev = 1.0;
    for (double u = 0.0; u < 100.0; u += 0.37) {
        const double t = b.tail_log(u);
        CHECK(t <= prev + 1e-15);
        prev = t;
    }
}

TEST_CASE("bounded perturbations have closed-form tails and moments") {
    PerturbationTailSpec u;
    u.kind = TailKind::uniform;
    u.lo = 1.0;
    u.hi = 2.0;
    u.finalize();
    CHECK(u.tail(0.9) == 1.0);
    CHECK(u.tail(1.5) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(u.tail(3.0) == 0.0);
    CHECK(u.quantile(0.25) == doctest::Approx(1.75).epsilon(1e-12));
    CHECK(u.moment(1.0) == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(u.moment(2.0) == doctest::Approx(7.0 / 3.0).epsilon(1e-9));
    CHECK_FALSE(u.heavy());

    PerturbationTailSpec pt;
    pt.kind = TailKind::point;
    pt.b0 = 3.0;
    pt.finalize();
    CHECK(pt.tail(2.9) == 1.0);
    CHECK(pt.tail(3.0) == 0.0);
    CHECK(pt.quantile(0.5) == 3.0);
    CHECK(pt.moment(2.0) == doctest::Approx(9.0).epsilon(1e-12));
}

TEST_CASE("model finalize classifies the regime and derives constants") {
    const auto m = canonical();
    CHECK(m.regime == Regime::critical);
    CHECK(m.critical());
    CHECK(m.alpha == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.rho == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m.e_log_a == -1.0);
    CHECK(m.ea_alpha == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.tilted.ez == doctest::Approx(m.rho).epsilon(1e-12));

    ModelSpec sub;
    sub.a = lognormal(-2.0, 2.0);
    sub.b = pareto11();
    sub.finalize();
    CHECK(sub.regime == Regime::subcritical);
    CHECK_FALSE(sub.critical());
    CHECK(sub.alpha == 1.0);
    CHECK(sub.ea_alpha == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(sub.rho == 0.0);

    // E A^{alpha_B} > 1 would give R a heavier tail than B
    ModelSpec heavy_a;
    heavy_a.a = lognormal(-0.5, 2.0);
    heavy_a.b = pareto11();
    CHECK_THROWS_AS(heavy_a.finalize(), PreconditionError);
}

TEST_CASE("pair sampling couples exactly across the b scale") {
    const auto m = canonical();
    RngStream r1(5, kPurposeSup, 3);
    RngStream r2(5, kPurposeSup, 3);
    for (int i = 0; i < 1000; ++i) {
        const auto [a1, b1] = m.sample_pair(r1);
        const auto [a2, b2] = m.sample_pair(r2, 2.0);
        CHECK(a1 == a2);
        CHECK(b2 == 2.0 * b1);
        CHECK(b1 >= 1.0);
        CHECK(a1 > 0.0);
    }
}

TEST_CASE("breiman dependence multiplies the factor into the perturbation") {
    ModelSpec m;
    m.a = lognormal(-1.0, 2.0);
    m.b = pareto11();
    m.dependence = Dependence::breiman;
    m.finalize();
    CHECK(m.critical());
    CHECK(m.alpha == doctest::Approx(1.0).epsilon(1e-12));

    // with the same stream, the breiman draw is a times the independent draw
    const auto ind = canonical();
    RngStream r1(5, kPurposeSup, 3);
    RngStream r2(5, kPurposeSup, 3);
    for (int i = 0; i < 1000; ++i) {
        const auto [a1, b1] = ind.sample_pair(r1);
        const auto [a2, b2] = m.sample_pair(r2);
        CHECK(a1 == a2);
        CHECK(b2 == a1 * b1);
    }

    ModelSpec bad;
    bad.a = lognormal(-1.0, 2.0);
    bad.b.kind = TailKind::uniform;
    bad.dependence = Dependence::breiman;
    CHECK_THROWS_AS(bad.finalize(), SchemaError);
}

TEST_CASE("joint moment diagnostic is stable where the moment is finite") {
    const auto m = canonical();
    const auto arb = model::check_arb(m, 0.5, 100000, 42, 1);
    CHECK(arb.stable);
    CHECK(arb.n == 100000);
    // E A^{1/2} E B^{1/2} = e^{-1/4} * 2
    CHECK(arb.estimate == doctest::Approx(2.0 * std::exp(-0.25)).epsilon(0.04));
    CHECK(arb.stderror > 0.0);
    CHECK(arb.stderror < 0.05);
}
