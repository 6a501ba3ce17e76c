#pragma once

#include "config.hpp"

#include "branchtrace/continuation.hpp"
#include "branchtrace/mcbvp.hpp"

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace branchtrace::app {

enum ExitCode : int { kOk = 0, kFailure = 1, kStalled = 2, kConfigError = 3, kVerifyFailure = 4 };

struct Overrides {
    std::optional<std::string> out;
    std::optional<int> seed;
    std::optional<int> max_steps;
};

struct Problem {
    ParameterizedSystem system;
    Point start;
    std::shared_ptr<const mcbvp::MeshProblem> mesh;  // null for builtins
    std::optional<mcbvp::BaseSolution> base;
};

/// Builds the system and its start point. mcbvp runs solve for u0 here.
Problem build_problem(const RunConfig& cfg);

struct VerifyCheck {
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

std::vector<VerifyCheck> oracle_checks(const RunConfig& cfg, const Problem& problem);

int run(const std::string& config_path, const Overrides& ov, std::ostream& log);
int verify(const std::string& config_path, const Overrides& ov, std::ostream& log);
int list_builtins(std::ostream& out);

/// Full command line entry point; returns the process exit code.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace branchtrace::app
