#pragma once

// Flat key = value run configuration. Lines starting with '#' are comments;
// unknown keys, duplicate keys and malformed values are rejected.

#include "branchtrace/continuation.hpp"

#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace branchtrace::app {

struct RunConfig {
    std::string problem;  // "mcbvp" or "builtin:<name>"

    // mcbvp parameters
    Index m = 200;
    double mu = 12.0;
    double q = 2.0;
    double delta = 0.1;
    double gradient_threshold = 1e3;

    std::optional<double> base_lambda;
    std::optional<std::vector<double>> start_u;  // builtins only
    std::string side = "both";

    continuation::StepControl step;
    std::optional<double> lambda_min;
    std::optional<double> lambda_max;
    std::optional<double> norm_cap;
    std::optional<double> boundary_threshold;

    std::string output_dir = "out";
    bool verify = false;
    int seed = 1;

    bool is_mcbvp() const { return problem == "mcbvp"; }
    std::string builtin_name() const;
};

/// Every accepted key, in documentation order.
const std::vector<std::string>& config_keys();

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

/// Semantic checks that need no computation beyond closed-form values.
/// Throws Error(ErrorKind::Config).
void validate(const RunConfig& cfg);

} // namespace branchtrace::app
