#include "prw/renewal.hpp"

#include <algorithm>
#include <cmath>

#include "prw/errors.hpp"
#include "prw/numerics.hpp"
#include "prw/parallel.hpp"

namespace prw::renewal {

namespace {

struct ScalarAcc {
    double sum = 0.0;
    double sumsq = 0.0;
    uint64_t n = 0;
    uint64_t discarded = 0;
};

// Runs visit(S_n) for every point of one path, starting at S_0 = 0 and
// including the first point above stop_level. Returns false if the step cap
// was reached first; the caller then drops the path.
template <class Visit>
bool walk_path(const model::TiltedLaw& z, RngStream& rng, double stop_level,
               uint64_t step_cap, Visit&& visit) {
    double s = 0.0;
    for (uint64_t step = 0;; ++step) {
        visit(s);
        if (s > stop_level) return true;
        if (step >= step_cap) return false;
        s += z.sample(rng);
    }
}

void check_options(const McOptions& opt) {
    if (opt.n_paths == 0)
        throw PreconditionError("ensemble needs at least one path");
    if (opt.step_cap == 0)
        throw PreconditionError("step cap must be positive");
}

void finish(ScalarAcc& total, const std::vector<ScalarAcc>& partials) {
    for (const auto& p : partials) {
        total.sum += p.sum;
        total.sumsq += p.sumsq;
        total.n += p.n;
        total.discarded += p.discarded;
    }
    if (total.n == 0)
        throw StabilityError("every path hit the step cap; no usable paths");
}

double stderr_of(const ScalarAcc& acc) {
    if (acc.n < 2) return 0.0;
    const double n = static_cast<double>(acc.n);
    const double mean = acc.sum / n;
    const double var = std::max(0.0, (acc.sumsq - n * mean * mean) / (n - 1.0));
    return std::sqrt(var / n);
}

} // namespace

FunctionalEstimate renewal_functional_mc(const model::TiltedLaw& z,
                                         const std::function<double(double)>& g,
                                         const std::function<bool(double)>& window,
                                         double u_max, const McOptions& opt) {
    check_options(opt);
    const double stop_level = u_max + 40.0 / z.alpha;
    const uint64_t n_chunks = chunk_count(opt.n_paths);
    auto partials = run_chunks<ScalarAcc>(n_chunks, opt.workers, [&](uint64_t c) {
        RngStream rng(opt.seed, opt.purpose, c);
        ScalarAcc acc;
        const uint64_t k = chunk_size(c, opt.n_paths);
        for (uint64_t i = 0; i < k; ++i) {
            double path_sum = 0.0;
            const bool ok = walk_path(z, rng, stop_level, opt.step_cap,
                                      [&](double s) {
                                          if (window(s)) path_sum += g(s);
                                      });
            if (ok) {
                acc.sum += path_sum;
                acc.sumsq += path_sum * path_sum;
                ++acc.n;
            } else {
                ++acc.discarded;
            }
        }
        return acc;
    });
    ScalarAcc total;
    finish(total, partials);
    FunctionalEstimate est;
    est.value = total.sum / static_cast<double>(total.n);
    est.stderror = stderr_of(total);
    est.n_paths = total.n;
    est.discarded = total.discarded;
    est.stop_level = stop_level;
    require_finite(est.value, "renewal functional");
    return est;
}

FunctionalEstimate renewal_interval_mc(const model::TiltedLaw& z, double a,
                                       double b, const McOptions& opt) {
    if (!(a < b)) throw PreconditionError("interval needs a < b");
    return renewal_functional_mc(
        z, [](double) { return 1.0; },
        [a, b](double s) { return s > a && s <= b; }, b, opt);
}

std::vector<FunctionalEstimate> renewal_bins_mc(const model::TiltedLaw& z,
                                                const std::vector<double>& edges,
                                                const McOptions& opt) {
    check_options(opt);
    if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()))
        throw PreconditionError("bin edges must be sorted with two or more entries");
    for (size_t i = 0; i + 1 < edges.size(); ++i)
        if (!(edges[i] < edges[i + 1]))
            throw PreconditionError("bin edges must be strictly increasing");
    const size_t n_bins = edges.size() - 1;
    const double stop_level = edges.back() + 40.0 / z.alpha;

    struct BinAcc {
        std::vector<double> sum, sumsq;
        uint64_t n = 0, discarded = 0;
    };
    const uint64_t n_chunks = chunk_count(opt.n_paths);
    auto partials = run_chunks<BinAcc>(n_chunks, opt.workers, [&](uint64_t c) {
        RngStream rng(opt.seed, opt.purpose, c);
        BinAcc acc;
        acc.sum.assign(n_bins, 0.0);
        acc.sumsq.assign(n_bins, 0.0);
        std::vector<double> counts(n_bins);
        const uint64_t k = chunk_size(c, opt.n_paths);
        for (uint64_t i = 0; i < k; ++i) {
            std::fill(counts.begin(), counts.end(), 0.0);
            const bool ok = walk_path(
                z, rng, stop_level, opt.step_cap, [&](double s) {
                    if (s <= edges.front() || s > edges.back()) return;
                    size_t idx = static_cast<size_t>(
                        std::upper_bound(edges.begin(), edges.end(), s) -
                        edges.begin() - 1);
                    if (idx >= n_bins) idx = n_bins - 1; // s == edges.back()
                    counts[idx] += 1.0;
                });
            if (ok) {
                for (size_t bkt = 0; bkt < n_bins; ++bkt) {
                    acc.sum[bkt] += counts[bkt];
                    acc.sumsq[bkt] += counts[bkt] * counts[bkt];
                }
                ++acc.n;
            } else {
                ++acc.discarded;
            }
        }
        return acc;
    });
    std::vector<double> sum(n_bins, 0.0), sumsq(n_bins, 0.0);
    uint64_t n = 0, discarded = 0;
    for (const auto& p : partials) {
        for (size_t bkt = 0; bkt < n_bins; ++bkt) {
            sum[bkt] += p.sum[bkt];
            sumsq[bkt] += p.sumsq[bkt];
        }
        n += p.n;
        discarded += p.discarded;
    }
    if (n == 0)
        throw StabilityError("every path hit the step cap; no usable paths");
    std::vector<FunctionalEstimate> out(n_bins);
    for (size_t bkt = 0; bkt < n_bins; ++bkt) {
        ScalarAcc acc{sum[bkt], sumsq[bkt], n, discarded};
        out[bkt].value = sum[bkt] / static_cast<double>(n);
        out[bkt].stderror = stderr_of(acc);
        out[bkt].n_paths = n;
        out[bkt].discarded = discarded;
        out[bkt].stop_level = stop_level;
    }
    return out;
}

std::vector<CheckPoint> stone_remainders(const model::TiltedLaw& z,
                                         const std::vector<double>& u_grid,
                                         const McOptions& opt) {
    check_options(opt);
    if (!z.strongly_non_lattice)
        throw GateError("the second-order renewal expansion requires the "
                        "normal-kind increment law");
    if (u_grid.empty() || !std::is_sorted(u_grid.begin(), u_grid.end()))
        throw PreconditionError("u grid must be sorted and nonempty");
    const size_t n_u = u_grid.size();
    const double stop_level = u_grid.back() + 40.0 / z.alpha;

    struct GridAcc {
        std::vector<double> sum, sumsq;
        uint64_t n = 0, discarded = 0;
    };
    const uint64_t n_chunks = chunk_count(opt.n_paths);
    auto partials = run_chunks<GridAcc>(n_chunks, opt.workers, [&](uint64_t c) {
        RngStream rng(opt.seed, opt.purpose, c);
        GridAcc acc;
        acc.sum.assign(n_u, 0.0);
        acc.sumsq.assign(n_u, 0.0);
        std::vector<double> incr(n_u);
        const uint64_t k = chunk_size(c, opt.n_paths);
        for (uint64_t i = 0; i < k; ++i) {
            std::fill(incr.begin(), incr.end(), 0.0);
            const bool ok = walk_path(
                z, rng, stop_level, opt.step_cap, [&](double s) {
                    // s counts toward every u_j >= s
                    const size_t idx = static_cast<size_t>(
                        std::lower_bound(u_grid.begin(), u_grid.end(), s) -
                        u_grid.begin());
                    if (idx < n_u) incr[idx] += 1.0;
                });
            if (ok) {
                double running = 0.0;
                for (size_t j = 0; j < n_u; ++j) {
                    running += incr[j];
                    acc.sum[j] += running;
                    acc.sumsq[j] += running * running;
                }
                ++acc.n;
            } else {
                ++acc.discarded;
            }
        }
        return acc;
    });
    std::vector<double> sum(n_u, 0.0), sumsq(n_u, 0.0);
    uint64_t n = 0;
    for (const auto& p : partials) {
        for (size_t j = 0; j < n_u; ++j) {
            sum[j] += p.sum[j];
            sumsq[j] += p.sumsq[j];
        }
        n += p.n;
    }
    if (n == 0)
        throw StabilityError("every path hit the step cap; no usable paths");
    std::vector<CheckPoint> out(n_u);
    for (size_t j = 0; j < n_u; ++j) {
        ScalarAcc acc{sum[j], sumsq[j], n, 0};
        out[j].u = u_grid[j];
        out[j].estimate = sum[j] / static_cast<double>(n) - u_grid[j] / z.ez;
        out[j].stderror = stderr_of(acc);
    }
    return out;
}

CheckPoint left_tail_scaled(const model::TiltedLaw& z, double u,
                            const McOptions& opt) {
    if (!(u >= 0.0)) throw PreconditionError("left tail depth must be >= 0");
    const double level = -u;
    auto est = renewal_functional_mc(
        z, [](double) { return 1.0; },
        [level](double s) { return s <= level; }, 0.0, opt);
    const double scale = std::exp(z.alpha * u);
    CheckPoint out;
    out.u = u;
    out.estimate = scale * est.value;
    out.stderror = scale * est.stderror;
    return out;
}

// ---------------------------------------------------------------------------
// Lattice convolution oracle
// ---------------------------------------------------------------------------

namespace {

// Tent discretization: mass between grid points splits linearly between its
// two neighbours, which preserves total mass and the mean exactly.
struct Kernel {
    int64_t base = 0; // increment of the first weight, in grid units
    std::vector<double> w;
    double deficit = 0.0; // mass outside the discretized span
};

Kernel discretize(const model::TiltedLaw& z, double h) {
    Kernel ker;
    if (z.kind == model::FactorFamily::two_point) {
        const double atoms[2] = {z.u1, z.u2};
        const double masses[2] = {z.w1, 1.0 - z.w1};
        const int64_t j1 = static_cast<int64_t>(std::floor(z.u1 / h));
        const int64_t j2 = static_cast<int64_t>(std::floor(z.u2 / h));
        ker.base = std::min(j1, j2);
        ker.w.assign(static_cast<size_t>(std::max(j1, j2) - ker.base) + 2, 0.0);
        for (int i = 0; i < 2; ++i) {
            const double pos = atoms[i] / h;
            const int64_t j = static_cast<int64_t>(std::floor(pos));
            const double frac = pos - static_cast<double>(j);
            ker.w[static_cast<size_t>(j - ker.base)] += masses[i] * (1.0 - frac);
            ker.w[static_cast<size_t>(j - ker.base) + 1] += masses[i] * frac;
        }
        return ker;
    }
    const double sd = std::sqrt(z.var);
    const int64_t j_lo = static_cast<int64_t>(std::floor((z.mean - 8.0 * sd) / h));
    const int64_t j_hi = static_cast<int64_t>(std::ceil((z.mean + 8.0 * sd) / h));
    ker.base = j_lo;
    ker.w.assign(static_cast<size_t>(j_hi - j_lo) + 1, 0.0);
    auto cdf = [&](double x) { return normal_cdf(x, z.mean, sd); };
    // integral of t dF over [a, b]
    auto m1 = [&](double a, double b) {
        const double za = (a - z.mean) / sd;
        const double zb = (b - z.mean) / sd;
        return z.mean * (cdf(b) - cdf(a)) + sd * (normal_pdf(za) - normal_pdf(zb));
    };
    double assigned = 0.0;
    for (int64_t j = j_lo; j <= j_hi; ++j) {
        const double a0 = static_cast<double>(j) * h;
        const double b0 = a0 + h;
        const double a1 = a0 - h;
        // mass landing on grid point j from the cells on either side
        const double right = (b0 * (cdf(b0) - cdf(a0)) - m1(a0, b0)) / h;
        const double left = (m1(a1, a0) - a1 * (cdf(a0) - cdf(a1))) / h;
        const double w = right + left;
        ker.w[static_cast<size_t>(j - j_lo)] = w;
        assigned += w;
    }
    ker.deficit = std::max(0.0, 1.0 - assigned);
    return ker;
}

} // namespace

double LatticeTable::mass_in(double a, double b) const {
    const int64_t k_lo = static_cast<int64_t>(std::floor(a / h + 1e-9)) + 1;
    const int64_t k_hi = static_cast<int64_t>(std::floor(b / h + 1e-9));
    double total = 0.0;
    for (int64_t k = std::max(k_lo, k_min);
         k <= std::min(k_hi, k_min + static_cast<int64_t>(mass.size()) - 1); ++k)
        total += mass[static_cast<size_t>(k - k_min)];
    return total;
}

LatticeTable renewal_lattice_oracle(const model::TiltedLaw& z, double h,
                                    double window_lo, double window_hi) {
    if (!(h > 0.0) || !std::isfinite(h))
        throw PreconditionError("lattice step must be positive");
    if (!(window_lo < window_hi))
        throw PreconditionError("reporting window must be nonempty");
    const double margin = 20.0 / z.alpha;
    const double lo = window_lo - margin;
    const double hi = window_hi + margin;
    if (!(lo <= 0.0 && hi >= 0.0))
        throw PreconditionError("padded range must contain the origin");
    const int64_t k_min = static_cast<int64_t>(std::floor(lo / h));
    const int64_t k_max = static_cast<int64_t>(std::ceil(hi / h));
    const uint64_t n_cells = static_cast<uint64_t>(k_max - k_min) + 1;
    if (n_cells > 50000000)
        throw PreconditionError("lattice range/step needs more than 5e7 cells");

    const Kernel ker = discretize(z, h);
    const int64_t n = static_cast<int64_t>(n_cells);
    const int64_t kw = static_cast<int64_t>(ker.w.size());

    LatticeTable table;
    table.h = h;
    table.k_min = k_min;
    table.window_lo = window_lo;
    table.window_hi = window_hi;
    table.mass.assign(n_cells, 0.0);

    std::vector<double> cur(n_cells, 0.0), next(n_cells, 0.0);
    cur[static_cast<size_t>(-k_min)] = 1.0; // S_0 = 0
    double escaped_left = 0.0, escaped_right = 0.0, deficit_total = 0.0;
    double residual = 0.0;
    bool drained = false;
    for (uint64_t iter = 0; iter < 100000; ++iter) {
        double in_range = 0.0;
        for (int64_t k = 0; k < n; ++k) {
            table.mass[static_cast<size_t>(k)] += cur[static_cast<size_t>(k)];
            in_range += cur[static_cast<size_t>(k)];
        }
        if (in_range < 1e-9) {
            residual = in_range;
            table.n_convolutions = iter;
            drained = true;
            break;
        }
        deficit_total += in_range * ker.deficit;
        std::fill(next.begin(), next.end(), 0.0);
        // clip-free interior first, then the two boundary strips
        const int64_t safe_lo = std::max<int64_t>(0, -ker.base);
        const int64_t safe_hi = std::min<int64_t>(n, n - ker.base - kw + 1);
        for (int64_t k = safe_lo; k < safe_hi; ++k) {
            const double c = cur[static_cast<size_t>(k)];
            if (c == 0.0) continue;
            double* dst = next.data() + (k + ker.base);
            for (int64_t j = 0; j < kw; ++j) dst[j] += c * ker.w[static_cast<size_t>(j)];
        }
        for (int64_t k = 0; k < n; ++k) {
            if (k >= safe_lo && k < safe_hi) continue;
            const double c = cur[static_cast<size_t>(k)];
            if (c == 0.0) continue;
            for (int64_t j = 0; j < kw; ++j) {
                const int64_t t = k + ker.base + j;
                const double w = c * ker.w[static_cast<size_t>(j)];
                if (t < 0)
                    escaped_left += w;
                else if (t >= n)
                    escaped_right += w;
                else
                    next[static_cast<size_t>(t)] += w;
            }
        }
        cur.swap(next);
    }
    if (!drained)
        throw QuadratureError("lattice iteration did not drain the range");

    // Every unit of neglected path mass can still produce at most about
    // range/EZ + 2 visits to the table, so scale the leaks by that factor.
    // Mass that left through the right edge sits at least `margin` above the
    // window and returns with probability at most e^{-alpha*margin}: since
    // E e^{-alpha Z} = 1, e^{-alpha S_n} is a martingale and first passage
    // below -y has probability at most e^{-alpha y}.
    const double revisit = (hi - lo) / z.ez + 2.0;
    const double right_return = escaped_right * std::exp(-z.alpha * margin);
    table.truncation_bound =
        (escaped_left + right_return + residual + deficit_total) * revisit;
    if (escaped_left * revisit > 1e-6)
        throw PreconditionError("mass escaping below the padded range exceeds "
                                "the 1e-6 budget; widen the window");
    return table;
}

} // namespace prw::renewal
