#include <doctest.h>

#include <json.hpp>
#include <string>

#include "subprocess.hpp"

using testutil::run_cli;
using testutil::slurp;
using testutil::spit;
using nlohmann::json;

namespace {

const std::string kWork = PRW_WORK_DIR;
const std::string kConfigs = PRW_CONFIG_DIR;

std::string write_config(const std::string& name, const json& j) {
    const std::string path = kWork + "/" + name;
    spit(path, j.dump(2) + "\n");
    return path;
}

json small_corl_config(double ratio_tol = 0.05) {
    json j;
    j["model"] = kConfigs + "/models/canonical.json";
    j["u_grid"] = {25.0, 50.0, 75.0};
    j["n_paths"] = 20000;
    j["tolerances"] = {{"ratio", ratio_tol}};
    return j;
}

} // namespace

TEST_CASE("cli help succeeds and names every subcommand") {
    const auto r = run_cli("--help");
    CHECK(r.code == 0);
    for (const char* sub :
         {"model-info", "renewal", "tail", "verify", "sv-check"})
        CHECK(r.output.find(sub) != std::string::npos);
}

TEST_CASE("model-info reports the derived constants as json") {
    const auto r =
        run_cli("model-info --model " + kConfigs + "/models/canonical.json");
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.output);
    CHECK(j.at("version") == "1.0.0");
    CHECK(j.at("regime") == "critical");
    CHECK(std::abs(j.at("alpha").get<double>() - 1.0) < 1e-9);
    CHECK(std::abs(j.at("rho").get<double>() - 1.0) < 1e-9);
    CHECK(std::abs(j.at("tilted").at("stone_constant").get<double>() - 1.5) < 1e-9);
    CHECK(j.at("tilted").at("strongly_non_lattice") == true);
    CHECK(j.at("arb").at("stable") == true);
}

TEST_CASE("verify exits 0 on a passing run and prints the report") {
    const auto cfg = write_config("cli_corl_pass.json", small_corl_config());
    const auto r = run_cli("verify --theorem corl --config " + cfg + " --seed 11");
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.output);
    CHECK(j.at("verdict") == "PASS");
    CHECK(j.at("seed") == 11);
}

TEST_CASE("verify exits 1 when a deliberately wrong column fails") {
    const auto r = run_cli("verify --theorem corl --config " + kConfigs +
                           "/negative/corl.json --seed 11");
    CHECK(r.code == 1);
    CHECK(r.output.find("\"verdict\": \"FAIL\"") != std::string::npos);
}

TEST_CASE("verify exits 2 on schema violations") {
    auto bad = small_corl_config();
    bad["bogus_key"] = 1;
    const auto cfg = write_config("cli_corl_bogus.json", bad);
    const auto r = run_cli("verify --theorem corl --config " + cfg + " --seed 1");
    CHECK(r.code == 2);
    CHECK(r.output.find("schema error") != std::string::npos);
    CHECK(r.output.find("/bogus_key") != std::string::npos);

    const auto cfg_ok = write_config("cli_corl_ok.json", small_corl_config());
    const auto unknown =
        run_cli("verify --theorem nope --config " + cfg_ok + " --seed 1");
    CHECK(unknown.code == 2);
}

TEST_CASE("verify exits 2 when required options are missing") {
    const auto cfg = write_config("cli_corl_seedless.json", small_corl_config());
    const auto r = run_cli("verify --theorem corl --config " + cfg);
    CHECK(r.code == 2);
}

TEST_CASE("verify exits 3 when the config file does not exist") {
    const auto r = run_cli("verify --theorem corl --config " + kWork +
                           "/no_such_config.json --seed 1");
    CHECK(r.code == 3);
    CHECK(r.output.find("io error") != std::string::npos);
}

TEST_CASE("verify exits 4 when a theorem gate rejects the model") {
    json j;
    j["model"] = kConfigs + "/models/two_point.json";
    j["u_grid"] = {50.0, 100.0};
    j["n_paths"] = 1000;
    const auto cfg = write_config("cli_lth_gate.json", j);
    const auto r = run_cli("verify --theorem lth --config " + cfg + " --seed 1");
    CHECK(r.code == 4);
    CHECK(r.output.find("error") != std::string::npos);
}

TEST_CASE("report and csv files are byte-identical for 1 and 8 workers") {
    const auto cfg = write_config("cli_corl_det.json", small_corl_config());
    const std::string base = "verify --theorem corl --config " + cfg + " --seed 11";
    const auto r1 = run_cli(base + " --workers 1 --out " + kWork +
                            "/det1.json --csv " + kWork + "/det1.csv");
    const auto r8 = run_cli(base + " --workers 8 --out " + kWork +
                            "/det8.json --csv " + kWork + "/det8.csv");
    REQUIRE(r1.code == 0);
    REQUIRE(r8.code == 0);
    const auto j1 = slurp(kWork + "/det1.json");
    const auto j8 = slurp(kWork + "/det8.json");
    REQUIRE_FALSE(j1.empty());
    CHECK(j1 == j8);
    const auto c1 = slurp(kWork + "/det1.csv");
    const auto c8 = slurp(kWork + "/det8.csv");
    REQUIRE_FALSE(c1.empty());
    CHECK(c1 == c8);
    // repeated run with the same worker count is also stable
    const auto again = run_cli(base + " --workers 1 --out " + kWork +
                               "/det1b.json --csv " + kWork + "/det1b.csv");
    REQUIRE(again.code == 0);
    CHECK(slurp(kWork + "/det1b.json") == j1);
}

TEST_CASE("renewal subcommand runs its named checks") {
    const auto r = run_cli("renewal --model " + kConfigs +
                           "/models/canonical.json --check blackwell --seed 7");
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.output);
    CHECK(j.at("check") == "blackwell");
    CHECK(j.at("pass") == true);

    const auto bad = run_cli("renewal --model " + kConfigs +
                             "/models/canonical.json --check nope --seed 7");
    CHECK(bad.code == 2);
}

TEST_CASE("sv-check reproduces the de Haan closed form") {
    const auto r = run_cli("sv-check --family log_power --c 1 --beta 1 "
                           "--check dehaan --u 10,100 --lambda 2");
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.output);
    const auto& pts = j.at("points");
    REQUIRE(pts.size() == 2);
    CHECK(std::abs(pts[0].at("value").get<double>() - 0.7120354635999986) < 1e-12);
    CHECK(std::abs(pts[1].at("value").get<double>() - 0.6954858733679139) < 1e-12);
    CHECK(std::abs(pts[0].at("limit").get<double>() - 0.6931471805599453) < 1e-15);
}

TEST_CASE("tail subcommand writes the exceedance curve") {
    const auto out = kWork + "/tail_cli.csv";
    const auto r = run_cli("tail --model " + kConfigs +
                           "/models/canonical.json --u 5,6 --paths 50000 "
                           "--blocks 5 --block-size 10000 --out " + out +
                           " --seed 3");
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.output);
    CHECK(j.at("min_moment_stable") == true);
    const auto text = slurp(out);
    CHECK(text.find("u,p_hat,ci_low,ci_high,theory_first,theory_second,"
                    "bias_bound\r\n") == 0);
}
