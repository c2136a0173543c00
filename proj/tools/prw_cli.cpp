// Command line front end.
//
// Exit codes: 0 success / verdict PASS, 1 verdict FAIL, 2 usage or schema
// violation, 3 I/O failure, 4 any other operational error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prw/config.hpp"
#include "prw/errors.hpp"
#include "prw/model.hpp"
#include "prw/numerics.hpp"
#include "prw/renewal.hpp"
#include "prw/slowly_varying.hpp"
#include "prw/supremum.hpp"
#include "prw/verify.hpp"

namespace {

using prw::cfg::json;

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

struct CommonOpts {
    std::string model_path;
    uint64_t seed = 1;
    unsigned workers = 0;

    unsigned effective_workers() const {
        return workers != 0 ? workers : prw::cfg::default_workers();
    }
};

json arb_json(const prw::model::ArbEstimate& arb) {
    json a;
    a["eta"] = arb.eta;
    a["estimate"] = arb.estimate;
    a["stderr"] = arb.stderror;
    a["estimate_half"] = arb.estimate_half;
    a["stable"] = arb.stable;
    a["n"] = arb.n;
    return a;
}

int run_model_info(const CommonOpts& opt, uint64_t arb_n) {
    json echo;
    const prw::model::ModelSpec m = prw::cfg::load_model_file(opt.model_path, &echo);
    json out;
    out["version"] = prw::cfg::kVersion;
    out["seed"] = opt.seed;
    out["model"] = echo;
    out["regime"] = m.critical() ? "critical" : "subcritical";
    out["alpha"] = m.alpha;
    out["rho"] = m.rho;
    out["e_log_a"] = m.e_log_a;
    out["ea_alpha"] = m.ea_alpha;
    if (m.critical()) {
        json t;
        t["ez"] = m.tilted.ez;
        t["ez2"] = m.tilted.ez2;
        t["stone_constant"] = m.tilted.ez2 / (2.0 * m.tilted.ez * m.tilted.ez);
        t["strongly_non_lattice"] = m.tilted.strongly_non_lattice;
        out["tilted"] = t;
    }
    out["arb"] = arb_json(prw::model::check_arb(m, m.alpha / 2.0, arb_n, opt.seed,
                                                opt.effective_workers()));
    emit(out);
    return 0;
}

int run_renewal(const CommonOpts& opt, const std::string& check, double u,
                double t, uint64_t paths, double h, double hi) {
    const prw::model::ModelSpec m = prw::cfg::load_model_file(opt.model_path);
    if (!m.critical())
        throw prw::GateError("renewal checks need the critical regime");
    const prw::model::TiltedLaw& z = m.tilted;

    prw::renewal::McOptions mc;
    mc.seed = opt.seed;
    mc.workers = opt.effective_workers();

    json out;
    out["check"] = check;
    json inputs;
    inputs["seed"] = opt.seed;
    inputs["version"] = prw::cfg::kVersion;

    if (check == "blackwell") {
        mc.n_paths = paths != 0 ? paths : 200000;
        inputs["u"] = u;
        inputs["t"] = t;
        inputs["paths"] = mc.n_paths;
        out["inputs"] = inputs;
        const auto est = prw::renewal::renewal_interval_mc(z, u, u + t, mc);
        const double theory = t / z.ez;
        out["estimate"] = est.value;
        out["stderr"] = est.stderror;
        out["theory"] = theory;
        out["pass"] = std::abs(est.value - theory) <= 0.02;
    } else if (check == "stone") {
        mc.n_paths = paths != 0 ? paths : 500000;
        inputs["u"] = u;
        inputs["paths"] = mc.n_paths;
        out["inputs"] = inputs;
        const auto pts = prw::renewal::stone_remainders(z, {u}, mc);
        const double theory = z.ez2 / (2.0 * z.ez * z.ez);
        out["estimate"] = pts[0].estimate;
        out["stderr"] = pts[0].stderror;
        out["theory"] = theory;
        out["pass"] = std::abs(pts[0].estimate - theory) <= 0.05;
    } else if (check == "lefttail") {
        mc.n_paths = paths != 0 ? paths : 1000000;
        inputs["u"] = u;
        inputs["paths"] = mc.n_paths;
        out["inputs"] = inputs;
        const auto pt = prw::renewal::left_tail_scaled(z, u, mc);
        const double theory = 1.0 / (-z.alpha * m.e_log_a);
        out["estimate"] = pt.estimate;
        out["stderr"] = pt.stderror;
        out["theory"] = theory;
        const double ratio = pt.estimate / theory;
        out["ratio"] = ratio;
        out["pass"] = ratio >= 0.8 && ratio <= 1.2;
    } else if (check == "oracle") {
        mc.n_paths = paths != 0 ? paths : 1000000;
        const int n_bins = static_cast<int>(hi);
        inputs["h"] = h;
        inputs["bins"] = n_bins;
        inputs["paths"] = mc.n_paths;
        out["inputs"] = inputs;
        const auto table =
            prw::renewal::renewal_lattice_oracle(z, h, 0.0, static_cast<double>(n_bins));
        std::vector<double> edges;
        for (int k = 0; k <= n_bins; ++k) edges.push_back(static_cast<double>(k));
        const auto bins = prw::renewal::renewal_bins_mc(z, edges, mc);
        json rows = json::array();
        double worst = 0.0;
        for (int k = 0; k < n_bins; ++k) {
            const double oracle = table.mass_in(edges[k], edges[k + 1]);
            const double mc_mass = bins[k].value;
            json row;
            row["bin_lo"] = edges[k];
            row["bin_hi"] = edges[k + 1];
            row["oracle"] = oracle;
            row["mc"] = mc_mass;
            row["mc_stderr"] = bins[k].stderror;
            if (oracle >= 0.1) {
                const double rel = std::abs(mc_mass - oracle) / oracle;
                row["rel_dev"] = rel;
                worst = std::max(worst, rel);
            }
            rows.push_back(std::move(row));
        }
        out["bins"] = rows;
        out["truncation_bound"] = table.truncation_bound;
        out["estimate"] = worst;
        out["stderr"] = 0.0;
        out["theory"] = 0.0;
        out["pass"] = worst <= 0.02;
    } else {
        throw prw::SchemaError("unknown renewal check \"" + check + "\"");
    }
    emit(out);
    return out["pass"].get<bool>() ? 0 : 1;
}

int run_tail(const CommonOpts& opt, const std::vector<double>& u_grid,
             uint64_t paths, double tau, uint64_t n_blocks, uint64_t block_size,
             const std::string& out_path) {
    prw::cfg::RunConfig c;
    c.model = prw::cfg::load_model_file(opt.model_path, &c.model_json);
    c.has_model = true;
    c.u_grid = u_grid;
    c.n_paths = paths;
    c.tau_stop = tau;
    c.n_blocks = n_blocks;
    c.block_size = block_size;
    c.seed = opt.seed;
    c.has_seed = true;

    const unsigned workers = opt.effective_workers();
    const prw::sup::MinMomentResult mm = prw::sup::min_moment_alpha(
        c.model, n_blocks, block_size, tau, opt.seed, workers);
    const double chat = mm.estimate / (c.model.alpha * c.model.rho);
    const prw::sup::TailCurve curve = prw::sup::tail_curve(
        c.model, u_grid, paths, tau, opt.seed, workers, chat);

    std::vector<std::vector<double>> rows;
    for (const auto& pt : curve.points)
        rows.push_back({pt.u, pt.p_hat, pt.ci_low, pt.ci_high, pt.theory_first,
                        pt.theory_second, pt.bias_bound});
    prw::cfg::write_csv(out_path,
                        {"u", "p_hat", "ci_low", "ci_high", "theory_first",
                         "theory_second", "bias_bound"},
                        rows);

    json summary;
    summary["version"] = prw::cfg::kVersion;
    summary["seed"] = opt.seed;
    summary["config_hash"] = prw::cfg::config_hash(c);
    summary["n_paths"] = paths;
    summary["tau_stop"] = tau;
    summary["chat"] = chat;
    summary["min_moment_stable"] = mm.stable;
    summary["truncated"] = curve.truncated;
    summary["mean_steps"] = curve.mean_steps;
    summary["out"] = out_path;
    emit(summary);
    return 0;
}

int run_verify(const std::string& theorem, const std::string& config_path,
               const std::string& model_path, uint64_t seed, unsigned workers,
               const std::string& out_path, const std::string& csv_path) {
    prw::cfg::RunConfig c = prw::cfg::load_run_config(config_path);
    if (!model_path.empty()) {
        c.model = prw::cfg::load_model_file(model_path, &c.model_json);
        c.has_model = true;
    }
    c.seed = seed;
    c.has_seed = true;
    if (workers != 0) c.workers = workers;
    if (!out_path.empty()) c.out = out_path;
    if (!csv_path.empty()) c.csv = csv_path;

    const prw::verify::Report rep = prw::verify::run_theorem(theorem, c);
    const std::string text = rep.json.dump(2) + "\n";
    if (!c.out.empty()) {
        prw::cfg::write_text_file(c.out, text);
        json brief;
        brief["theorem"] = theorem;
        brief["verdict"] = rep.pass ? "PASS" : "FAIL";
        brief["out"] = c.out;
        if (!c.csv.empty()) brief["csv"] = c.csv;
        emit(brief);
    } else {
        std::cout << text;
    }
    if (!c.csv.empty()) prw::cfg::write_csv(c.csv, rep.csv_header, rep.csv_rows);
    return rep.pass ? 0 : 1;
}

int run_sv_check(const std::string& family, double c_param, double beta,
                 const std::string& l_path, const std::string& check,
                 const std::vector<double>& u_grid, double x0, double lambda,
                 double alpha, double delta) {
    prw::sv::SlowlyVaryingSpec sv;
    if (!l_path.empty()) {
        sv = prw::cfg::parse_sv_spec(prw::cfg::load_json_file(l_path), "/L");
    } else {
        sv.family = prw::sv::family_from_name(family);
        sv.c = c_param;
        sv.beta = beta;
        sv.validate();
    }
    if (u_grid.empty()) throw prw::SchemaError("sv-check needs --u grid points");

    json out;
    out["check"] = check;
    out["family"] = prw::sv::family_name(sv.family);
    out["c"] = sv.c;
    out["beta"] = sv.beta;
    json points = json::array();
    if (check == "dehaan") {
        for (const double u : u_grid) {
            json pt;
            pt["u"] = u;
            pt["lambda"] = lambda;
            pt["value"] = prw::sv::dehaan_ratio(sv, lambda, u);
            pt["limit"] = std::log(lambda);
            points.push_back(std::move(pt));
        }
    } else if (check == "karamata") {
        for (const double u : u_grid) {
            json pt;
            pt["u"] = u;
            pt["alpha"] = alpha;
            pt["value"] = prw::sv::karamata_ratio(sv, alpha, x0, u);
            pt["limit"] = 1.0;
            points.push_back(std::move(pt));
        }
    } else if (check == "tilde") {
        for (const double u : u_grid) {
            const auto v = prw::sv::tilde_log(sv, x0, u);
            json pt;
            pt["u"] = u;
            pt["x0"] = x0;
            pt["value"] = v.value;
            pt["abs_tol"] = v.abs_tol;
            points.push_back(std::move(pt));
        }
    } else if (check == "potter") {
        const auto rep = prw::sv::potter_check(sv, delta, u_grid);
        json pt;
        pt["delta"] = delta;
        pt["a_full"] = rep.a_full;
        pt["a_prefix"] = rep.a_prefix;
        points.push_back(std::move(pt));
    } else {
        throw prw::SchemaError("unknown sv check \"" + check + "\"");
    }
    out["points"] = points;
    emit(out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical toolkit for renewal measures and the supremum of a "
                 "perturbed multiplicative random walk"};
    app.require_subcommand(1);

    CommonOpts common;

    auto* info = app.add_subcommand("model-info", "print derived model quantities");
    info->add_option("--model", common.model_path, "model JSON file")->required();
    info->add_option("--seed", common.seed, "master seed");
    info->add_option("--workers", common.workers, "worker threads");
    uint64_t arb_n = 100000;
    info->add_option("--arb-n", arb_n, "samples for the cross-moment estimate");

    auto* ren = app.add_subcommand("renewal", "renewal measure checks");
    ren->add_option("--model", common.model_path, "model JSON file")->required();
    std::string check;
    ren->add_option("--check", check, "blackwell|stone|lefttail|oracle")->required();
    double ren_u = 30.0, ren_t = 1.0, ren_h = 0.01, ren_hi = 12.0;
    uint64_t ren_paths = 0;
    ren->add_option("--u", ren_u, "window point (default depends on the check)");
    ren->add_option("--t", ren_t, "interval length for blackwell");
    ren->add_option("--paths", ren_paths, "Monte Carlo paths");
    ren->add_option("--step", ren_h, "lattice step for oracle");
    ren->add_option("--bins", ren_hi, "number of unit bins for oracle");
    ren->add_option("--seed", common.seed, "master seed");
    ren->add_option("--workers", common.workers, "worker threads");

    auto* tail = app.add_subcommand("tail", "tail curve of the supremum");
    tail->add_option("--model", common.model_path, "model JSON file")->required();
    std::vector<double> tail_u;
    tail->add_option("--u", tail_u, "log thresholds")->required()->delimiter(',');
    uint64_t tail_paths = 10000000;
    double tail_tau = 1e-6;
    uint64_t tail_blocks = 30, tail_block_size = 100000;
    std::string tail_out;
    tail->add_option("--paths", tail_paths, "Monte Carlo paths");
    tail->add_option("--tau", tail_tau, "stopping level for the running product");
    tail->add_option("--blocks", tail_blocks, "blocks for the second-order constant");
    tail->add_option("--block-size", tail_block_size, "samples per block");
    tail->add_option("--out", tail_out, "output CSV file")->required();
    tail->add_option("--seed", common.seed, "master seed");
    tail->add_option("--workers", common.workers, "worker threads");

    auto* ver = app.add_subcommand("verify", "run a theorem experiment");
    std::string theorem, ver_config, ver_model, ver_out, ver_csv;
    uint64_t ver_seed = 0;
    unsigned ver_workers = 0;
    ver->add_option("--theorem", theorem,
                    "corl|lth|pert1|pert2|goldie|subcritical")
        ->required();
    ver->add_option("--config", ver_config, "experiment config JSON")->required();
    ver->add_option("--model", ver_model, "model JSON (overrides the config)");
    ver->add_option("--seed", ver_seed, "master seed")->required();
    ver->add_option("--out", ver_out, "report JSON path");
    ver->add_option("--csv", ver_csv, "points CSV path");
    ver->add_option("--workers", ver_workers, "worker threads");

    auto* svc = app.add_subcommand("sv-check", "slowly varying function checks");
    std::string sv_family, sv_file, sv_check_name;
    double sv_c = 1.0, sv_beta = 0.0, sv_x0 = 1.0, sv_lambda = 2.0;
    double sv_alpha = 1.0, sv_delta = 0.1;
    std::vector<double> sv_u;
    svc->add_option("--family", sv_family, "constant|log_power|iterated_log|oscillating");
    svc->add_option("--c", sv_c, "scale parameter");
    svc->add_option("--beta", sv_beta, "exponent for log_power");
    svc->add_option("--L", sv_file, "slowly varying law JSON file");
    svc->add_option("--check", sv_check_name, "dehaan|karamata|potter|tilde")
        ->required();
    svc->add_option("--u", sv_u, "log-scale grid")->delimiter(',');
    svc->add_option("--x0", sv_x0, "lower integration limit");
    svc->add_option("--lambda", sv_lambda, "ratio step for dehaan");
    svc->add_option("--alpha", sv_alpha, "index for karamata");
    svc->add_option("--delta", sv_delta, "exponent for potter");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (info->parsed()) return run_model_info(common, arb_n);
        if (ren->parsed()) {
            if (ren->count("--u") == 0)
                ren_u = (check == "lefttail") ? 5.0 : 30.0;
            return run_renewal(common, check, ren_u, ren_t, ren_paths, ren_h, ren_hi);
        }
        if (tail->parsed())
            return run_tail(common, tail_u, tail_paths, tail_tau, tail_blocks,
                            tail_block_size, tail_out);
        if (ver->parsed())
            return run_verify(theorem, ver_config, ver_model, ver_seed,
                              ver_workers, ver_out, ver_csv);
        if (svc->parsed())
            return run_sv_check(sv_family, sv_c, sv_beta, sv_file, sv_check_name,
                                sv_u, sv_x0, sv_lambda, sv_alpha, sv_delta);
        return 2;
    } catch (const prw::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return 2;
    } catch (const prw::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const prw::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
