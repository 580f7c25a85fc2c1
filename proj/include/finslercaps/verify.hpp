#pragma once

#include "finslercaps/parallel.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace finslercaps {

/// Outcome of one randomized invariant suite. Every field is a pure function
/// of the seed: no timings, no thread counts.
struct SuiteResult {
    std::string name;
    std::int64_t trials = 0;
    std::int64_t violations = 0;
    /// Largest observed error relative to the suite's tolerance scale.
    double max_error = 0.0;
    bool passed = false;
    std::vector<std::pair<std::string, double>> metrics;
};

struct SuiteOptions {
    std::uint64_t seed = 0;
    Exec exec = Exec::Serial;
};

/// convex, capacity, legendre, modification, geodesic, radial, symplectic, squeeze.
const std::vector<std::string>& suite_names();

/// Runs one suite; DomainError for unknown names.
SuiteResult run_suite(const std::string& name, const SuiteOptions& opts = {});

/// "all" expands to every suite in suite_names() order.
std::vector<SuiteResult> run_suites(const std::string& name, const SuiteOptions& opts = {});

} // namespace finslercaps
