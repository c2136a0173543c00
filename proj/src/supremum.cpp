#include "prw/supremum.hpp"

#include <algorithm>
#include <cmath>

#include "prw/errors.hpp"
#include "prw/numerics.hpp"
#include "prw/parallel.hpp"

namespace prw::sup {

namespace {

void check_tau(double tau) {
    if (!(tau > 0.0 && tau < 1.0))
        throw PreconditionError("tau must lie in (0, 1)");
}

} // namespace

SupSample sample_sup(const model::ModelSpec& m, double tau, uint64_t step_cap,
                     RngStream& rng, double b_scale) {
    check_tau(tau);
    if (step_cap == 0) throw PreconditionError("step cap must be positive");
    SupSample out;
    double pi = 1.0;
    for (;;) {
        const auto [a, b] = m.sample_pair(rng, b_scale);
        ++out.steps;
        out.value = std::max(out.value, pi * b);
        pi *= a;
        if (pi <= tau) break;
        if (out.steps >= step_cap) {
            out.truncated = true;
            break;
        }
    }
    out.pi_final = pi;
    return out;
}

ExceedanceResult exceedance_counts(const model::ModelSpec& m,
                                   const std::vector<double>& thresholds,
                                   uint64_t n_paths, double tau,
                                   uint64_t master_seed, unsigned workers,
                                   uint64_t purpose, double b_scale,
                                   uint64_t step_cap) {
    check_tau(tau);
    if (thresholds.empty() || !std::is_sorted(thresholds.begin(), thresholds.end()))
        throw PreconditionError("thresholds must be sorted and nonempty");
    if (n_paths == 0) throw PreconditionError("ensemble needs at least one path");

    struct Acc {
        std::vector<uint64_t> counts;
        uint64_t truncated = 0;
        uint64_t steps = 0;
    };
    const uint64_t n_chunks = chunk_count(n_paths);
    auto partials = run_chunks<Acc>(n_chunks, workers, [&](uint64_t c) {
        RngStream rng(master_seed, purpose, c);
        Acc acc;
        acc.counts.assign(thresholds.size(), 0);
        const uint64_t k = chunk_size(c, n_paths);
        for (uint64_t i = 0; i < k; ++i) {
            const SupSample s = sample_sup(m, tau, step_cap, rng, b_scale);
            if (s.truncated) ++acc.truncated;
            acc.steps += s.steps;
            // thresholds are sorted, so exceedances form a prefix
            for (size_t j = 0; j < thresholds.size(); ++j) {
                if (s.value > thresholds[j])
                    ++acc.counts[j];
                else
                    break;
            }
        }
        return acc;
    });
    ExceedanceResult out;
    out.thresholds = thresholds;
    out.counts.assign(thresholds.size(), 0);
    out.n_paths = n_paths;
    uint64_t steps = 0;
    for (const auto& p : partials) {
        for (size_t j = 0; j < thresholds.size(); ++j) out.counts[j] += p.counts[j];
        out.truncated += p.truncated;
        steps += p.steps;
    }
    out.mean_steps = static_cast<double>(steps) / static_cast<double>(n_paths);
    return out;
}

MinMomentResult min_moment_alpha(const model::ModelSpec& m, uint64_t n_blocks,
                                 uint64_t block_size, double tau,
                                 uint64_t master_seed, unsigned workers) {
    check_tau(tau);
    if (n_blocks < 2) throw PreconditionError("need at least two blocks");
    if (block_size == 0) throw PreconditionError("block size must be positive");
    const double alpha = m.alpha;

    struct BlockOut {
        double mean = 0.0;
        uint64_t truncated = 0;
    };
    auto blocks = run_chunks<BlockOut>(n_blocks, workers, [&](uint64_t blk) {
        RngStream r_rng(master_seed, kPurposeMinMomentR, blk);
        RngStream ab_rng(master_seed, kPurposeMinMomentAB, blk);
        BlockOut out;
        double sum = 0.0;
        for (uint64_t i = 0; i < block_size; ++i) {
            const SupSample s = sample_sup(m, tau, kDefaultStepCap, r_rng, 1.0);
            if (s.truncated) ++out.truncated;
            const auto [a, b] = m.sample_pair(ab_rng, 1.0);
            const double v = std::max(0.0, std::min(a * s.value, b));
            sum += std::pow(v, alpha);
        }
        out.mean = sum / static_cast<double>(block_size);
        return out;
    });

    std::vector<double> means;
    means.reserve(n_blocks);
    MinMomentResult res;
    for (const auto& b : blocks) {
        means.push_back(b.mean);
        res.truncated += b.truncated;
    }
    auto sigma_of = [](const std::vector<double>& v) {
        const double spread = interquartile_range(v) / 1.349;
        return 1.2533 * spread / std::sqrt(static_cast<double>(v.size()));
    };
    res.estimate = median(means);
    res.sigma = sigma_of(means);
    const size_t half = std::max<size_t>(2, (means.size() + 1) / 2);
    std::vector<double> head(means.begin(), means.begin() + half);
    res.estimate_half = median(head);
    res.sigma_half = sigma_of(head);
    res.stable = std::abs(res.estimate - res.estimate_half) <=
                 3.0 * std::sqrt(res.sigma * res.sigma +
                                 res.sigma_half * res.sigma_half) +
                     1e-300;
    res.n_blocks = n_blocks;
    res.block_size = block_size;
    require_finite(res.estimate, "min moment estimate");
    return res;
}

KsResult fixed_point_distance(const model::ModelSpec& m, uint64_t n, double tau,
                              uint64_t master_seed, unsigned workers) {
    check_tau(tau);
    if (n < 2) throw PreconditionError("need at least two samples");

    struct Samples {
        std::vector<double> r, mapped;
        uint64_t truncated = 0;
    };
    const uint64_t n_chunks = chunk_count(n);
    auto partials = run_chunks<Samples>(n_chunks, workers, [&](uint64_t c) {
        RngStream r_rng(master_seed, kPurposeKsR, c);
        RngStream rp_rng(master_seed, kPurposeKsRPrime, c);
        RngStream ab_rng(master_seed, kPurposeKsAB, c);
        Samples s;
        const uint64_t k = chunk_size(c, n);
        s.r.reserve(k);
        s.mapped.reserve(k);
        for (uint64_t i = 0; i < k; ++i) {
            const SupSample r = sample_sup(m, tau, kDefaultStepCap, r_rng, 1.0);
            const SupSample rp = sample_sup(m, tau, kDefaultStepCap, rp_rng, 1.0);
            if (r.truncated) ++s.truncated;
            if (rp.truncated) ++s.truncated;
            const auto [a, b] = m.sample_pair(ab_rng, 1.0);
            s.r.push_back(r.value);
            s.mapped.push_back(std::max(a * rp.value, b));
        }
        return s;
    });
    std::vector<double> x, y;
    x.reserve(n);
    y.reserve(n);
    KsResult out;
    for (const auto& p : partials) {
        x.insert(x.end(), p.r.begin(), p.r.end());
        y.insert(y.end(), p.mapped.begin(), p.mapped.end());
        out.truncated += p.truncated;
    }
    out.statistic = ks_two_sample(x, y);
    out.n = n;
    return out;
}

PluginResult goldie_constant_plugin(const model::ModelSpec& m, uint64_t n,
                                    double tau, uint64_t master_seed,
                                    unsigned workers) {
    check_tau(tau);
    if (n == 0) throw PreconditionError("ensemble needs at least one sample");
    const double alpha = m.alpha;

    struct Acc {
        double sum = 0.0, sumsq = 0.0;
        uint64_t truncated = 0;
    };
    const uint64_t n_chunks = chunk_count(n);
    auto partials = run_chunks<Acc>(n_chunks, workers, [&](uint64_t c) {
        RngStream r_rng(master_seed, kPurposeGoldieR, c);
        RngStream ab_rng(master_seed, kPurposeGoldieAB, c);
        Acc acc;
        const uint64_t k = chunk_size(c, n);
        for (uint64_t i = 0; i < k; ++i) {
            const SupSample r = sample_sup(m, tau, kDefaultStepCap, r_rng, 1.0);
            if (r.truncated) ++acc.truncated;
            const auto [a, b] = m.sample_pair(ab_rng, 1.0);
            const double ar = a * r.value;
            const double v =
                std::pow(std::max(ar, b), alpha) - std::pow(ar, alpha);
            acc.sum += v;
            acc.sumsq += v * v;
        }
        return acc;
    });
    double sum = 0.0, sumsq = 0.0;
    PluginResult out;
    for (const auto& p : partials) {
        sum += p.sum;
        sumsq += p.sumsq;
        out.truncated += p.truncated;
    }
    const double nd = static_cast<double>(n);
    out.value = sum / nd;
    out.n = n;
    if (n >= 2) {
        const double var =
            std::max(0.0, (sumsq - nd * out.value * out.value) / (nd - 1.0));
        out.stderror = std::sqrt(var / nd);
    }
    require_finite(out.value, "plug-in constant");
    return out;
}

double stopping_bias_bound(const model::ModelSpec& m, double tau, double u) {
    check_tau(tau);
    const double a_prime = m.alpha - 0.1;
    if (!(a_prime > 0.0))
        throw PreconditionError("bias bound needs alpha > 0.1");
    const double ea = std::exp(m.a.cumulant(a_prime));
    if (!(ea < 1.0))
        throw PreconditionError("bias bound needs E A^(alpha - 0.1) < 1");
    const double eb = m.b.moment(a_prime);
    return std::pow(tau, a_prime) * eb / (1.0 - ea) * std::exp(-a_prime * u);
}

TailCurve tail_curve(const model::ModelSpec& m,
                     const std::vector<double>& u_grid, uint64_t n_paths,
                     double tau, uint64_t master_seed, unsigned workers,
                     double chat, const TheoryScales& scales) {
    if (!m.critical())
        throw GateError("tail curve theory applies to the critical regime");
    if (!m.b.heavy())
        throw GateError("tail curve theory needs a heavy perturbation");
    if (u_grid.empty() || !std::is_sorted(u_grid.begin(), u_grid.end()))
        throw PreconditionError("u grid must be sorted and nonempty");

    TailCurve curve;
    curve.chat = chat * scales.chat_scale;
    curve.points.resize(u_grid.size());
    for (size_t j = 0; j < u_grid.size(); ++j) {
        auto& pt = curve.points[j];
        pt.u = u_grid[j];
        const double damp = std::exp(-m.alpha * pt.u);
        pt.theory_first = damp * m.b.tilde0(pt.u) * scales.tilde_scale /
                          (m.rho * scales.rho_scale);
        pt.theory_second = pt.theory_first - damp * curve.chat;
        pt.bias_bound = stopping_bias_bound(m, tau, pt.u);
        if (!(pt.bias_bound < 0.05 * pt.theory_first))
            throw PreconditionError(
                "stopping bias bound reaches 5% of the first-order tail; "
                "use a smaller tau or smaller thresholds");
    }

    std::vector<double> thresholds(u_grid.size());
    for (size_t j = 0; j < u_grid.size(); ++j) thresholds[j] = std::exp(u_grid[j]);
    const ExceedanceResult exc = exceedance_counts(
        m, thresholds, n_paths, tau, master_seed, workers, kPurposeSup);
    curve.n_paths = exc.n_paths;
    curve.truncated = exc.truncated;
    curve.mean_steps = exc.mean_steps;
    for (size_t j = 0; j < u_grid.size(); ++j) {
        const WilsonInterval w = wilson_interval(exc.counts[j], n_paths);
        curve.points[j].p_hat = w.p_hat;
        curve.points[j].ci_low = w.lo;
        curve.points[j].ci_high = w.hi;
    }
    return curve;
}

} // namespace prw::sup
