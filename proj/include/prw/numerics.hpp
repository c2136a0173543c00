#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "prw/errors.hpp"

namespace prw {

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

struct QuadratureOptions {
    // Absolute tolerance is abs_tol_base * (1 + |integral estimate|).
    double abs_tol_base = 1e-9;
    uint64_t budget = 1'000'000; // max integrand evaluations
};

// Adaptive composite Simpson with Richardson correction. Throws
// QuadratureError if the tolerance cannot be met within the budget.
template <class F>
double adaptive_simpson(F&& f, double a, double b, QuadratureOptions opt = {}) {
    if (a == b) return 0.0;
    struct Node {
        double a, b, fa, fm, fb, whole, tol;
    };
    uint64_t evals = 0;
    auto eval = [&](double x) {
        if (++evals > opt.budget)
            throw QuadratureError("quadrature budget exhausted before reaching tolerance");
        return f(x);
    };
    const double fa = eval(a);
    const double m0 = 0.5 * (a + b);
    const double fm = eval(m0);
    const double fb = eval(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double tol = opt.abs_tol_base * (1.0 + std::abs(whole));

    double total = 0.0;
    std::vector<Node> stack;
    stack.push_back({a, b, fa, fm, fb, whole, tol});
    while (!stack.empty()) {
        const Node n = stack.back();
        stack.pop_back();
        const double m = 0.5 * (n.a + n.b);
        const double lm = 0.5 * (n.a + m);
        const double rm = 0.5 * (m + n.b);
        if (lm <= n.a || rm >= n.b) { // interval no longer refinable
            total += n.whole;
            continue;
        }
        const double flm = eval(lm);
        const double frm = eval(rm);
        const double left = (m - n.a) / 6.0 * (n.fa + 4.0 * flm + n.fm);
        const double right = (n.b - m) / 6.0 * (n.fm + 4.0 * frm + n.fb);
        const double delta = left + right - n.whole;
        if (std::abs(delta) <= 15.0 * n.tol) {
            total += left + right + delta / 15.0;
        } else {
            stack.push_back({n.a, m, n.fa, flm, n.fm, left, 0.5 * n.tol});
            stack.push_back({m, n.b, n.fm, frm, n.fb, right, 0.5 * n.tol});
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// Normal distribution helpers
// ---------------------------------------------------------------------------

inline double normal_cdf(double x, double mu = 0.0, double sd = 1.0) {
    return 0.5 * std::erfc(-(x - mu) / (sd * 1.4142135623730951));
}

inline double normal_pdf(double x, double mu = 0.0, double sd = 1.0) {
    const double t = (x - mu) / sd;
    return std::exp(-0.5 * t * t) / (sd * 2.5066282746310002);
}

// ---------------------------------------------------------------------------
// Binomial confidence interval
// ---------------------------------------------------------------------------

struct WilsonInterval {
    double p_hat;
    double lo;
    double hi;
};

// Wilson score interval; default z is the two-sided 95% point.
inline WilsonInterval wilson_interval(uint64_t k, uint64_t n,
                                      double z = 1.959963984540054) {
    if (n == 0) throw PreconditionError("wilson_interval: n must be positive");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half =
        z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {p, std::max(0.0, center - half), std::min(1.0, center + half)};
}

// ---------------------------------------------------------------------------
// Order statistics
// ---------------------------------------------------------------------------

// Linear-interpolation quantile (the common "type 7" rule) of a sorted vector.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw PreconditionError("quantile of empty sample");
    if (sorted.size() == 1) return sorted[0];
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, 0.5);
}

inline double interquartile_range(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
}

// ---------------------------------------------------------------------------
// Two-sample Kolmogorov-Smirnov distance
// ---------------------------------------------------------------------------

inline double ks_two_sample(std::vector<double> x, std::vector<double> y) {
    if (x.empty() || y.empty())
        throw PreconditionError("ks_two_sample: empty sample");
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double t = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= t) ++i;
        while (j < y.size() && y[j] <= t) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / nx -
                                 static_cast<double>(j) / ny));
    }
    return d;
}

// ---------------------------------------------------------------------------
// Simple fits and rank statistics
// ---------------------------------------------------------------------------

struct LineFit {
    double slope;
    double intercept;
};

inline LineFit least_squares(const std::vector<double>& x,
                             const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw PreconditionError("least_squares: need two or more points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw PreconditionError("least_squares: degenerate abscissae");
    return {sxy / sxx, my - sxy / sxx * mx};
}

inline std::vector<double> ranks_with_ties(const std::vector<double>& v) {
    std::vector<size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    size_t i = 0;
    while (i < idx.size()) {
        size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw PreconditionError("pearson: zero-variance input");
    return sxy / std::sqrt(sxx * syy);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3)
        throw PreconditionError("spearman: need three or more points");
    return pearson(ranks_with_ties(x), ranks_with_ties(y));
}

inline void require_finite(double v, const char* what) {
    if (!std::isfinite(v))
        throw Error(std::string("non-finite value in ") + what);
}

} // namespace prw
