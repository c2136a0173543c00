#include "prw/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "prw/errors.hpp"

namespace prw::cfg {

namespace {

[[noreturn]] void schema_fail(const std::string& path, const std::string& what) {
    throw SchemaError("at " + path + ": " + what);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    std::vector<std::string> unknown;
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                ok = true;
                break;
            }
        if (!ok) unknown.push_back(path + "/" + item.key());
    }
    if (!unknown.empty())
        throw SchemaError("unknown config keys", unknown);
}

const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const char* key, const std::string& path) {
    const json* v = find(obj, key);
    if (!v) schema_fail(path, std::string("missing required key \"") + key + "\"");
    return *v;
}

void require_object(const json& v, const std::string& path) {
    if (!v.is_object()) schema_fail(path, "expected an object");
}

double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) schema_fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) schema_fail(path, "expected a finite number");
    return x;
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) schema_fail(path, "expected a string");
    return v.get<std::string>();
}

uint64_t as_count(const json& v, const std::string& path) {
    const double x = as_number(v, path);
    if (x < 0.0 || x != std::floor(x) || x > 1e15)
        schema_fail(path, "expected a nonnegative integer");
    return static_cast<uint64_t>(x);
}

double number_or(const json& obj, const char* key, const std::string& path,
                 double def) {
    const json* v = find(obj, key);
    return v ? as_number(*v, path + "/" + key) : def;
}

sv::SlowlyVaryingSpec parse_sv(const json& j, const std::string& path) {
    require_object(j, path);
    check_keys(j, path, {"family", "params"});
    sv::SlowlyVaryingSpec spec;
    spec.family = sv::family_from_name(as_string(require(j, "family", path),
                                                 path + "/family"));
    json params = json::object();
    if (const json* p = find(j, "params")) {
        require_object(*p, path + "/params");
        params = *p;
    }
    const std::string ppath = path + "/params";
    switch (spec.family) {
        case sv::Family::constant:
            check_keys(params, ppath, {"c"});
            spec.c = number_or(params, "c", ppath, 1.0);
            break;
        case sv::Family::log_power:
            check_keys(params, ppath, {"c", "beta"});
            spec.c = number_or(params, "c", ppath, 1.0);
            spec.beta = as_number(require(params, "beta", ppath), ppath + "/beta");
            break;
        case sv::Family::iterated_log:
            check_keys(params, ppath, {"c"});
            spec.c = number_or(params, "c", ppath, 1.0);
            break;
        case sv::Family::oscillating:
            check_keys(params, ppath, {});
            break;
    }
    spec.validate();
    return spec;
}

model::FactorLawSpec parse_factor(const json& j, const std::string& path) {
    require_object(j, path);
    check_keys(j, path, {"family", "params"});
    model::FactorLawSpec a;
    const std::string fam = as_string(require(j, "family", path), path + "/family");
    const json& params = require(j, "params", path);
    require_object(params, path + "/params");
    const std::string ppath = path + "/params";
    if (fam == "lognormal") {
        a.family = model::FactorFamily::lognormal;
        check_keys(params, ppath, {"m", "s2"});
        a.m = as_number(require(params, "m", ppath), ppath + "/m");
        a.s2 = as_number(require(params, "s2", ppath), ppath + "/s2");
    } else if (fam == "two_point") {
        a.family = model::FactorFamily::two_point;
        check_keys(params, ppath, {"u1", "u2", "p"});
        a.u1 = as_number(require(params, "u1", ppath), ppath + "/u1");
        a.u2 = as_number(require(params, "u2", ppath), ppath + "/u2");
        a.p = as_number(require(params, "p", ppath), ppath + "/p");
    } else {
        schema_fail(path + "/family", "unknown factor family \"" + fam + "\"");
    }
    a.validate();
    return a;
}

model::PerturbationTailSpec parse_perturbation(const json& j,
                                               const std::string& path) {
    require_object(j, path);
    model::PerturbationTailSpec b;
    if (const json* kind = find(j, "kind")) {
        const std::string k = as_string(*kind, path + "/kind");
        if (k == "uniform") {
            check_keys(j, path, {"kind", "lo", "hi"});
            b.kind = model::TailKind::uniform;
            b.lo = as_number(require(j, "lo", path), path + "/lo");
            b.hi = as_number(require(j, "hi", path), path + "/hi");
        } else if (k == "point") {
            check_keys(j, path, {"kind", "b0"});
            b.kind = model::TailKind::point;
            b.b0 = as_number(require(j, "b0", path), path + "/b0");
        } else {
            schema_fail(path + "/kind", "unknown perturbation kind \"" + k + "\"");
        }
        return b;
    }
    check_keys(j, path, {"alpha", "L", "x_floor"});
    b.kind = model::TailKind::reg_var;
    b.alpha = as_number(require(j, "alpha", path), path + "/alpha");
    b.sv = parse_sv(require(j, "L", path), path + "/L");
    b.x_floor = number_or(j, "x_floor", path, 1.0);
    return b;
}

std::string dir_of(const std::string& path) {
    const size_t pos = path.find_last_of('/');
    if (pos == std::string::npos) return ".";
    if (pos == 0) return "/";
    return path.substr(0, pos);
}

} // namespace

unsigned default_workers() {
    if (const char* env = std::getenv("PRW_WORKERS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end && *end == '\0' && v >= 1 && v <= 4096)
            return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("cannot read " + path);
    json j = json::parse(buf.str(), nullptr, false);
    if (j.is_discarded())
        throw SchemaError("file " + path + " is not valid JSON");
    return j;
}

model::ModelSpec parse_model(const json& j, const std::string& where) {
    require_object(j, where);
    check_keys(j, where, {"A", "B", "dependence"});
    model::ModelSpec m;
    m.a = parse_factor(require(j, "A", where), where + "/A");
    m.b = parse_perturbation(require(j, "B", where), where + "/B");
    if (const json* dep = find(j, "dependence")) {
        const std::string d = as_string(*dep, where + "/dependence");
        if (d == "independent")
            m.dependence = model::Dependence::independent;
        else if (d == "breiman")
            m.dependence = model::Dependence::breiman;
        else
            schema_fail(where + "/dependence",
                        "expected \"independent\" or \"breiman\"");
    }
    m.finalize();
    return m;
}

model::ModelSpec load_model_file(const std::string& path, json* echo) {
    const json j = load_json_file(path);
    if (echo) *echo = j;
    return parse_model(j, "/model(" + path + ")");
}

sv::SlowlyVaryingSpec parse_sv_spec(const json& j, const std::string& where) {
    return parse_sv(j, where);
}

namespace {

std::vector<double> parse_u_grid(const json& j, const std::string& path) {
    std::vector<double> grid;
    if (j.is_array()) {
        if (j.empty()) schema_fail(path, "u_grid must not be empty");
        for (size_t i = 0; i < j.size(); ++i)
            grid.push_back(as_number(j[i], path + "/" + std::to_string(i)));
        for (size_t i = 0; i + 1 < grid.size(); ++i)
            if (!(grid[i] < grid[i + 1]))
                schema_fail(path, "u_grid must be strictly increasing");
        return grid;
    }
    if (j.is_object()) {
        check_keys(j, path, {"start", "stop", "step"});
        const double start = as_number(require(j, "start", path), path + "/start");
        const double stop = as_number(require(j, "stop", path), path + "/stop");
        const double step = as_number(require(j, "step", path), path + "/step");
        if (!(step > 0.0)) schema_fail(path + "/step", "step must be positive");
        if (!(stop >= start)) schema_fail(path + "/stop", "stop must be >= start");
        const uint64_t count =
            static_cast<uint64_t>(std::floor((stop - start) / step + 1e-9));
        if (count > 1000000) schema_fail(path, "grid has more than 1e6 points");
        for (uint64_t k = 0; k <= count; ++k)
            grid.push_back(start + static_cast<double>(k) * step);
        return grid;
    }
    schema_fail(path, "u_grid must be a list or a {start, stop, step} object");
}

NegativeControl parse_control(const json& j, const std::string& path) {
    require_object(j, path);
    check_keys(j, path, {"tilde_scale", "rho_scale", "chat_scale", "limit_scale"});
    NegativeControl c;
    c.tilde_scale = number_or(j, "tilde_scale", path, 1.0);
    c.rho_scale = number_or(j, "rho_scale", path, 1.0);
    c.chat_scale = number_or(j, "chat_scale", path, 1.0);
    c.limit_scale = number_or(j, "limit_scale", path, 1.0);
    for (double v : {c.tilde_scale, c.rho_scale, c.chat_scale, c.limit_scale})
        if (!std::isfinite(v) || v < 0.0)
            schema_fail(path, "scales must be finite and nonnegative");
    if (c.rho_scale == 0.0)
        schema_fail(path + "/rho_scale", "rho_scale must be positive");
    return c;
}

} // namespace

RunConfig parse_run_config(const json& j, const std::string& base_dir) {
    require_object(j, "");
    check_keys(j, "", {"model", "u_grid", "n_paths", "tau_stop", "x0", "n_blocks",
                       "block_size", "seed", "workers", "out", "csv",
                       "negative_control", "tolerances"});
    RunConfig c;
    if (const json* m = find(j, "model")) {
        if (m->is_string()) {
            std::string p = m->get<std::string>();
            if (!p.empty() && p[0] != '/') p = base_dir + "/" + p;
            c.model = load_model_file(p, &c.model_json);
        } else {
            c.model_json = *m;
            c.model = parse_model(*m, "/model");
        }
        c.has_model = true;
    }
    if (const json* g = find(j, "u_grid")) c.u_grid = parse_u_grid(*g, "/u_grid");
    if (const json* v = find(j, "n_paths")) {
        c.n_paths = as_count(*v, "/n_paths");
        if (c.n_paths < 1) schema_fail("/n_paths", "n_paths must be >= 1");
    }
    if (const json* v = find(j, "tau_stop")) {
        c.tau_stop = as_number(*v, "/tau_stop");
        if (!(c.tau_stop > 0.0 && c.tau_stop < 1.0))
            schema_fail("/tau_stop", "tau_stop must lie in (0, 1)");
    }
    if (const json* v = find(j, "x0")) {
        c.x0 = as_number(*v, "/x0");
        if (!(c.x0 > 0.0)) schema_fail("/x0", "x0 must be positive");
    }
    if (const json* v = find(j, "n_blocks")) {
        c.n_blocks = as_count(*v, "/n_blocks");
        if (c.n_blocks < 2) schema_fail("/n_blocks", "n_blocks must be >= 2");
    }
    if (const json* v = find(j, "block_size")) {
        c.block_size = as_count(*v, "/block_size");
        if (c.block_size < 1) schema_fail("/block_size", "block_size must be >= 1");
    }
    if (const json* v = find(j, "seed")) {
        c.seed = as_count(*v, "/seed");
        c.has_seed = true;
    }
    if (const json* v = find(j, "workers")) {
        const uint64_t w = as_count(*v, "/workers");
        if (w < 1 || w > 4096) schema_fail("/workers", "workers must be in [1, 4096]");
        c.workers = static_cast<unsigned>(w);
    }
    if (const json* v = find(j, "out")) c.out = as_string(*v, "/out");
    if (const json* v = find(j, "csv")) c.csv = as_string(*v, "/csv");
    if (const json* v = find(j, "negative_control"))
        c.control = parse_control(*v, "/negative_control");
    if (const json* v = find(j, "tolerances")) {
        require_object(*v, "/tolerances");
        for (const auto& item : v->items())
            c.tolerances[item.key()] =
                as_number(item.value(), "/tolerances/" + item.key());
    }
    return c;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(load_json_file(path), dir_of(path));
}

json config_echo(const RunConfig& c) {
    json e;
    e["version"] = kVersion;
    e["model"] = c.has_model ? c.model_json : json(nullptr);
    e["u_grid"] = c.u_grid;
    e["n_paths"] = c.n_paths;
    e["tau_stop"] = c.tau_stop;
    e["x0"] = c.x0;
    e["n_blocks"] = c.n_blocks;
    e["block_size"] = c.block_size;
    e["seed"] = c.seed;
    json nc;
    nc["tilde_scale"] = c.control.tilde_scale;
    nc["rho_scale"] = c.control.rho_scale;
    nc["chat_scale"] = c.control.chat_scale;
    nc["limit_scale"] = c.control.limit_scale;
    e["negative_control"] = nc;
    e["tolerances"] = json(c.tolerances);
    return e;
}

std::string fnv1a_hex(const std::string& bytes) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    char buf[17];
    static const char* digits = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = digits[h & 0xF];
        h >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf, 16);
}

std::string config_hash(const RunConfig& c) { return fnv1a_hex(config_echo(c).dump()); }

namespace {

void append_number(std::string& out, double v) {
    if (!std::isfinite(v)) throw Error("non-finite value in CSV output");
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

} // namespace

std::string csv_text(const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += "\r\n";
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw Error("CSV row width does not match the header");
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            append_number(out, row[i]);
        }
        out += "\r\n";
    }
    return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    write_text_file(path, csv_text(header, rows));
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw IoError("cannot write " + path);
}

} // namespace prw::cfg
