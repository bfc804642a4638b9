#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evobs/geometry.hpp"

namespace evobs {

/// Parsed experiment configuration. Analytic coefficient fields are referenced
/// by registered form names with numeric parameter arrays; no expressions are
/// parsed.
struct RunConfig {
    // grid
    int dim = 1;
    std::array<double, 2> lo{0.0, 0.0}, hi{1.0, 1.0};
    std::array<int, 2> n{0, 0};

    MetricSpec metric;
    ScalarFieldSpec psi{"sq-dist", {-1.0}};
    std::optional<ScalarFieldSpec> q;
    std::optional<ScalarFieldSpec> p;

    double horizon = 0.1;
    int steps = 400;
    std::string method = "spectral";

    std::vector<double> lambda_multipliers{1.0, 2.0, 5.0};
    std::vector<int> lambda_indices{25};
    std::vector<double> thetas{2.0, 3.0};
    std::vector<double> o4_lambdas{2.0, 5.0, 10.0, 50.0, 200.0, 1000.0};

    int sample_count = 64;
    std::uint64_t seed = 7;
    int mode_cutoff = 30;

    double interior_fraction = 0.3;    // omega: x_1 below lo + fraction*(hi-lo)
    double spacetime_fraction = 0.1;   // F: share of (boundary node, step) pairs
    std::uint64_t spacetime_seed = 7;

    double headroom = 1.0;
    bool dump_fields = false;
    int workers = 1;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

/// Canonical serialization (sorted keys) used both for reproducibility checks
/// and for the config hash recorded in reports.
std::string canonical_config(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

} // namespace evobs
