#pragma once

// Theorem harnesses: each one turns a limit statement into a deterministic
// pass/fail experiment with pre-registered tolerances. Reports carry every
// observed point, every criterion with its threshold, and the gates that had
// to hold before the experiment was allowed to run.

#include <string>
#include <vector>

#include "prw/config.hpp"

namespace prw::verify {

struct Report {
    cfg::json json;
    bool pass = false;
    std::vector<std::string> csv_header;
    std::vector<std::vector<double>> csv_rows;
};

// Ratio of the windowed renewal functional of ell(u - .) on (0, u] to its
// predicted scale; passes when the terminal ratio sits in the band and the
// deviations do not grow from the lower half of the grid to the upper half.
Report verify_corl(const cfg::RunConfig& c);

// Full-line version: remainder D(u) against the zero-based integral scale,
// normalized by ell at u; bounded remainder plus a flat trend line.
Report verify_lth(const cfg::RunConfig& c);

// First-order tail of the supremum: slope of the rescaled tail against the
// predicted scale, a rising ratio trend, and a terminal ratio band.
Report verify_pert_first(const cfg::RunConfig& c);

// Second-order tail: the remainder after removing the first-order term must
// stay flat and its top-half mean is compared against the independently
// estimated second-order constant.
Report verify_pert_second(const cfg::RunConfig& c);

// Bounded perturbation: scaled exceedance at the largest threshold against
// the plug-in constant.
Report verify_goldie(const cfg::RunConfig& c);

// Contractive regime: exceedance over the perturbation tail against the
// closed-form limit.
Report verify_subcritical(const cfg::RunConfig& c);

// Dispatch on the theorem token used by the command line.
Report run_theorem(const std::string& theorem, const cfg::RunConfig& c);

} // namespace prw::verify
