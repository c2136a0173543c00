#pragma once

// Experiment configuration: strict-schema JSON in, canonical hash out.
// Unknown keys are rejected with their JSON pointer paths so a typo in a
// config file can never silently fall back to a default.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "prw/model.hpp"

namespace prw::cfg {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "1.0.0";

// PRW_WORKERS environment variable when set to a positive integer, otherwise
// the hardware concurrency (at least 1).
unsigned default_workers();

// IoError when the file cannot be read, SchemaError when it is not JSON.
json load_json_file(const std::string& path);

// Strict model parse; `where` prefixes JSON pointer paths in error messages.
model::ModelSpec parse_model(const json& j, const std::string& where = "/model");
model::ModelSpec load_model_file(const std::string& path, json* echo = nullptr);

// Strict parse of a {"family", "params"} slowly varying description.
sv::SlowlyVaryingSpec parse_sv_spec(const json& j, const std::string& where = "/L");

// Multipliers for theory columns; any value other than 1 marks the config as
// a deliberately wrong control that must end in FAIL.
struct NegativeControl {
    double tilde_scale = 1.0;
    double rho_scale = 1.0;
    double chat_scale = 1.0;
    double limit_scale = 1.0;
};

struct RunConfig {
    model::ModelSpec model;
    json model_json;      // parsed model object, echoed into reports
    bool has_model = false;
    std::vector<double> u_grid;
    uint64_t n_paths = 100000;
    double tau_stop = 1e-6;
    double x0 = 1.0;
    uint64_t n_blocks = 30;
    uint64_t block_size = 100000;
    uint64_t seed = 1;
    bool has_seed = false;
    unsigned workers = 0; // 0 means "use default_workers()"
    std::string out;
    std::string csv;
    NegativeControl control;
    std::map<std::string, double> tolerances;
};

// base_dir resolves a relative "model" path inside the config file.
RunConfig parse_run_config(const json& j, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);

// Canonical effective parameters: everything that influences the numbers.
// Worker count and output paths are excluded so reruns on different machines
// hash identically.
json config_echo(const RunConfig& c);
std::string config_hash(const RunConfig& c);

// FNV-1a 64 over the bytes of a string, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

// RFC 4180: comma separated, CRLF line endings, '.' decimal point, header
// row first. Values go through shortest-round-trip formatting and must be
// finite.
std::string csv_text(const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

void write_text_file(const std::string& path, const std::string& text);

} // namespace prw::cfg
