#include <doctest.h>

#include <string>
#include <vector>

#include "prw/config.hpp"
#include "prw/verify.hpp"

using namespace prw;

namespace {

cfg::json canonical_model_json() {
    return cfg::json::parse(R"({
        "A": {"family": "lognormal", "params": {"m": -1.0, "s2": 2.0}},
        "B": {"alpha": 1.0, "L": {"family": "constant", "params": {"c": 1.0}},
              "x_floor": 1.0}
    })");
}

cfg::json two_point_model_json() {
    return cfg::json::parse(R"({
        "A": {"family": "two_point",
              "params": {"u1": 1.0, "u2": -1.4142135623730951, "p": 0.305791}},
        "B": {"alpha": 1.0, "L": {"family": "constant", "params": {"c": 1.0}},
              "x_floor": 1.0}
    })");
}

cfg::RunConfig base_config(cfg::json model, std::vector<double> grid,
                           uint64_t n_paths, uint64_t seed = 11) {
    cfg::json j;
    j["model"] = std::move(model);
    j["u_grid"] = std::move(grid);
    j["n_paths"] = n_paths;
    j["seed"] = seed;
    return cfg::parse_run_config(j);
}

} // namespace

TEST_CASE("corl report carries criteria, points and a verdict") {
    auto c = base_config(canonical_model_json(), {25.0, 50.0, 75.0}, 20000);
    const auto rep = verify::verify_corl(c);
    CHECK(rep.pass);
    CHECK(rep.json.at("verdict") == "PASS");
    CHECK(rep.json.at("theorem") == "corl");
    CHECK(rep.json.at("version") == cfg::kVersion);
    CHECK(rep.json.at("seed") == 11);
    CHECK(rep.json.at("config_hash").get<std::string>().size() == 16);
    CHECK(rep.json.at("criteria").size() == 2);
    CHECK(rep.csv_header.size() == 5);
    REQUIRE(rep.csv_rows.size() == 3);
    CHECK(rep.csv_rows[0][0] == 25.0);
    // the echoed hash is reproducible from the config alone
    CHECK(rep.json.at("config_hash") == cfg::config_hash(c));
}

TEST_CASE("verify reports are byte-stable across worker counts") {
    auto c1 = base_config(canonical_model_json(), {25.0, 50.0}, 20000);
    auto c4 = c1;
    c1.workers = 1;
    c4.workers = 4;
    const auto r1 = verify::verify_corl(c1);
    const auto r4 = verify::verify_corl(c4);
    CHECK(r1.json.dump(2) == r4.json.dump(2));
    CHECK(cfg::csv_text(r1.csv_header, r1.csv_rows) ==
          cfg::csv_text(r4.csv_header, r4.csv_rows));
}

TEST_CASE("missing inputs are schema errors, thin grids precondition errors") {
    cfg::json j;
    j["u_grid"] = {25.0, 50.0};
    j["n_paths"] = 1000;
    j["seed"] = 1;
    auto no_model = cfg::parse_run_config(j);
    CHECK_THROWS_AS(verify::verify_corl(no_model), SchemaError);

    auto c = base_config(canonical_model_json(), {25.0}, 1000);
    CHECK_THROWS_AS(verify::verify_corl(c), PreconditionError);

    auto d = base_config(canonical_model_json(), {5.0, 6.0, 7.0}, 1000);
    d.has_seed = false;
    CHECK_THROWS_AS(verify::verify_pert_first(d), SchemaError);
}

TEST_CASE("corl rejects a window that starts below x0") {
    auto c = base_config(canonical_model_json(), {1.0, 50.0}, 1000);
    c.x0 = 10.0;
    CHECK_THROWS_AS(verify::verify_corl(c), PreconditionError);
}

TEST_CASE("a scaled theory column flips the verdict") {
    auto c = base_config(canonical_model_json(), {25.0, 50.0, 75.0, 100.0}, 20000);
    c.control.tilde_scale = 1.25;
    const auto rep = verify::verify_corl(c);
    CHECK_FALSE(rep.pass);
    CHECK(rep.json.at("verdict") == "FAIL");
}

TEST_CASE("theorem gates route the wrong model family to errors") {
    auto tp = base_config(two_point_model_json(), {5.0, 6.0, 7.0, 8.0}, 1000);
    CHECK_THROWS_AS(verify::verify_lth(tp), GateError);
    CHECK_THROWS_AS(verify::verify_pert_second(tp), GateError);

    // heavy B cannot feed the bounded-perturbation comparison
    auto heavy = base_config(canonical_model_json(), {5.0}, 1000);
    CHECK_THROWS_AS(verify::verify_goldie(heavy), GateError);

    // critical model cannot feed the strictly subcritical limit
    CHECK_THROWS_AS(verify::verify_subcritical(heavy), GateError);

    cfg::json sub = canonical_model_json();
    sub["A"]["params"]["m"] = -2.0;
    auto s = base_config(sub, {5.0, 6.0, 7.0}, 1000);
    CHECK_THROWS_AS(verify::verify_corl(s), GateError);
    CHECK_THROWS_AS(verify::verify_pert_first(s), GateError);
}

TEST_CASE("dispatch accepts the six theorem names and nothing else") {
    auto c = base_config(canonical_model_json(), {25.0, 50.0}, 5000);
    const auto rep = verify::run_theorem("corl", c);
    CHECK(rep.json.at("theorem") == "corl");
    CHECK_THROWS_AS(verify::run_theorem("bogus", c), SchemaError);
}

TEST_CASE("pert reports expose the gates they rely on") {
    auto c = base_config(canonical_model_json(),
                         {3.0, 4.0, 5.0, 6.0, 7.0}, 200000);
    const auto rep = verify::verify_pert_first(c);
    CHECK(rep.json.at("gates").at("arb").at("stable") == true);
    CHECK(rep.json.at("gates").at("critical") == true);
    CHECK(rep.json.at("ensemble").at("truncated") == 0);
    CHECK(rep.json.at("points").size() == 5);
    CHECK(rep.json.at("ratios").size() == 5);
}

TEST_CASE("config echo is order-stable and hashing ignores outputs") {
    auto c = base_config(canonical_model_json(), {25.0, 50.0}, 20000);
    auto c2 = c;
    c2.workers = 4;
    c2.out = "/tmp/some_report.json";
    c2.csv = "/tmp/some_points.csv";
    CHECK(cfg::config_echo(c) == cfg::config_echo(c2));
    CHECK(cfg::config_hash(c) == cfg::config_hash(c2));

    auto c3 = c;
    c3.seed = 12;
    CHECK(cfg::config_hash(c) != cfg::config_hash(c3));
    auto c4 = c;
    c4.n_paths = 20001;
    CHECK(cfg::config_hash(c) != cfg::config_hash(c4));
}
