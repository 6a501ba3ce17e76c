#pragma once

// Small analytic systems with known solution sets. They anchor the tests and
// are available from the CLI as builtin:<name>.

#include "branchtrace/problem_model.hpp"

#include <string>
#include <vector>

namespace branchtrace::builtins {

/// u^2 + lambda^2 - 1
ParameterizedSystem circle();
/// u^2 - lambda
ParameterizedSystem fold();
/// lambda u - u^3
ParameterizedSystem pitchfork();
/// u - lambda
ParameterizedSystem line();
/// A u - lambda b
ParameterizedSystem linear(const Matrix& a, const Vector& b);
/// (u^2 - lambda, v): the fold embedded in two states with a trivially
/// solvable complement equation.
ParameterizedSystem embedded_fold();
/// (u^2 + v^2 - lambda, v - u^2): a fold whose complement equation couples
/// back to the kernel coordinate.
ParameterizedSystem coupled_fold();

struct BuiltinCase {
    std::string name;
    ParameterizedSystem system;
    Point start;  // default start point on the base slice
};

std::vector<std::string> names();
/// Looks up a builtin by name (circle, fold, pitchfork, line).
BuiltinCase make(const std::string& name);

} // namespace branchtrace::builtins
