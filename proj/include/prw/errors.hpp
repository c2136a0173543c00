#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace prw {

// Base class for all library errors. The CLI maps subclasses to exit codes:
// SchemaError -> 2, IoError -> 3, everything else -> 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Config or model JSON violates the schema. `details` holds one message per
// offending key, each prefixed with its JSON pointer path.
struct SchemaError : Error {
    std::vector<std::string> details;

    explicit SchemaError(const std::string& msg) : Error(msg) {}
    SchemaError(const std::string& msg, std::vector<std::string> d)
        : Error(msg + ": " + join(d)), details(std::move(d)) {}

  private:
    static std::string join(const std::vector<std::string>& d) {
        std::string out;
        for (const auto& s : d) {
            if (!out.empty()) out += "; ";
            out += s;
        }
        return out;
    }
};

// File missing or unreadable/unwritable.
struct IoError : Error {
    using Error::Error;
};

// Adaptive quadrature could not reach the requested tolerance in budget.
struct QuadratureError : Error {
    using Error::Error;
};

// No positive root of the cumulant equation.
struct NoRootError : Error {
    using Error::Error;
};

// Operation called outside its catalog gate (e.g. a two-point factor law
// where a smooth tilted increment is required, or the wrong tail regime).
struct GateError : Error {
    using Error::Error;
};

// Argument outside the documented domain (empty window, bad tau, ...).
struct PreconditionError : Error {
    using Error::Error;
};

// A Monte Carlo diagnostic flagged the estimate as unstable.
struct StabilityError : Error {
    using Error::Error;
};

} // namespace prw
