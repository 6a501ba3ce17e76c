#pragma once

// Brute-force reference computations. None of these share code with the
// main solvers they are used to check.

#include "branchtrace/problem_model.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace branchtrace::oracles {

/// Central-difference D_uF, column j stepped by h_fd * (1 + |u_j|).
Matrix fd_jacobian(const ParameterizedSystem& system, const Point& point, double h_fd);

/// Central-difference D_lambdaF with step h_fd * (1 + |lambda|).
Vector fd_lambda_derivative(const ParameterizedSystem& system, const Point& point, double h_fd);

/// Forward-difference D_uF; used to cross-check fd_jacobian itself.
Matrix fd_jacobian_forward(const ParameterizedSystem& system, const Point& point, double h_fd);

struct ShootingConfig {
    double ode_step = 1e-5;
    double bisect_tol = 1e-10;
    /// Initial-slope search interval. A non-positive upper end means "choose
    /// automatically" (capped below 1/sqrt(lambda) on the Minkowski side).
    double slope_lo = 1e-3;
    double slope_hi = 0.0;
    int max_bisections = 200;
};

struct ShootingResult {
    double slope = 0.0;       // u'(0)
    Vector nodes;             // u at x_i = i/(m+1), i = 1..m
    double terminal_value = 0.0;
    int bisections = 0;
};

/// Positive solution of -(u'/sqrt(1 - lambda u'^2))' = mu u - u^q on (0,1),
/// u(0) = u(1) = 0, by RK4 shooting on
/// u'' = (1 - lambda u'^2)^{3/2} (u^q - mu u) and bisection on u'(0).
/// Samples are returned at the m interior nodes of the uniform mesh.
ShootingResult shooting_solve(double mu, double q, double lambda, Index m,
                              const ShootingConfig& cfg = {});

using SliceMap = std::function<Vector(const Vector&)>;

struct Box {
    Vector lower;
    Vector upper;

    Index dim() const { return lower.size(); }
    double diameter() const { return (upper - lower).norm(); }
    bool contains(const Vector& v) const;
};

/// Degree of `f` on `box` for dimension 1 (signed sign-change count on a
/// uniform grid with grid_n cells) or 2 (winding number of f along the box
/// boundary, grid_n segments per side).
int brute_force_degree(const SliceMap& f, const Box& box, int grid_n);

} // namespace branchtrace::oracles

namespace branchtrace::oracles {

/// Polynomial slice map with known zeros, for degree cross-checks.
/// Dimension 1: c * prod (u - r_i). Dimension 2: the complex product
/// prod g_i(w), w = u + i v, with g_i = (w - r_i) or its conjugate, so each
/// zero has index +1 or -1 respectively.
struct PolynomialSlice {
    SliceMap f;
    std::function<Matrix(const Vector&)> jac;
    Box box;
    std::vector<Vector> roots;
    int expected_degree = 0;  // from the construction, not from any solver
};

PolynomialSlice random_polynomial_slice(std::uint64_t seed, int dim);

} // namespace branchtrace::oracles
