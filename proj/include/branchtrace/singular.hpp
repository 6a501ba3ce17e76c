#pragma once

// Lyapunov-Schmidt reduction at a zero where D_uF is singular.
//
// With K an orthonormal basis of N[D_uF], C an orthonormal basis of the
// orthogonal complement of R[D_uF], Y = K^perp and R = C^perp:
//   P = K K^T,  Q = I - C C^T (projects onto the range),
//   psi(lambda, x) in Y solves Q F(lambda, u1 + x + psi) = 0,
//   G(lambda, z) = C^T F(lambda, u1 + K z + psi(lambda, K z)).
// Zeros of G near (lambda1, 0) are in one-to-one correspondence with zeros
// of F near (lambda1, u1) through `lift`.

#include "branchtrace/problem_model.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace branchtrace::singular {

struct KernelAnalysis {
    Index kernel_dim = 0;
    Matrix kernel_basis;    // n_state x kernel_dim
    Matrix cokernel_basis;  // n_state x kernel_dim
    Vector singular_values; // descending
};

KernelAnalysis kernel_analysis(const ParameterizedSystem& system, const Point& point,
                               double rank_tol = 1e-8, double residual_tol = 1e-8);

struct ReductionOptions {
    double rank_tol = 1e-8;
    double residual_tol = 1e-8;
    double psi_tolerance = 1e-12;
    int psi_max_iter = 25;
    double trust_radius = 0.1;
};

struct ReducedProblem {
    ParameterizedSystem system;
    Point singular_point;
    Index kernel_dim = 0;
    Matrix kernel_basis;      // K
    Matrix cokernel_basis;    // C
    Matrix complement_basis;  // basis of Y
    Matrix range_basis;       // basis of R[D_uF]
    Matrix projector_P;
    Matrix projector_Q;
    double psi_tolerance = 1e-12;
    int psi_max_iter = 25;
    double trust_radius = 0.1;
};

ReducedProblem ls_reduce(const ParameterizedSystem& system, const Point& point,
                         const ReductionOptions& opts = {});

struct ComplementSolve {
    Vector y;  // psi(lambda, x), a full-space vector in Y
    int iterations = 0;
};

/// Inner Newton for psi(lambda, x), x in the kernel, started from y = 0.
ComplementSolve solve_complement(const ReducedProblem& red, double lambda, const Vector& x);

Vector eval_reduced(const ReducedProblem& red, double lambda, const Vector& z);

Point lift(const ReducedProblem& red, double lambda, const Vector& z);

/// Inverse of lift on the reduced coordinates: (lambda, K^T (u - u1)).
std::pair<double, Vector> project(const ReducedProblem& red, const Point& point);

struct HalfBranch {
    std::vector<double> lambdas;  // ordered from the singular point outward
    std::vector<Vector> z;
    std::vector<Point> points;    // lifted
    /// Unit direction (lambda - lambda1, z) of the innermost sample.
    Vector direction;
};

/// Half-branches of G = 0 leaving (lambda1, 0), found by marching sign
/// changes of G around `grid` concentric circles (geometrically spaced radii
/// from 1e-3 * radius to radius). Kernel dimension 1 only. An empty result
/// means the singular point is isolated in the zero set.
std::vector<HalfBranch> enumerate_branches(const ReducedProblem& red, double radius, int grid);

enum class FitKind { Regular, Inverse, DegenerateState, DegenerateLambda };

struct PuiseuxFit {
    FitKind kind = FitKind::Regular;
    /// Estimated 1/l in |u - u1| ~ |lambda - lambda1|^{1/l}; NaN when degenerate.
    double exponent = std::numeric_limits<double>::quiet_NaN();
    double residual = 0.0;  // RMS of the log-log fit
    std::size_t points_used = 0;
};

PuiseuxFit puiseux_exponent(const std::vector<Point>& half_branch, const Point& singular_point);

struct SwitchResult {
    Point restart;
    Vector tangent;
    std::size_t incoming = 0;
    std::size_t outgoing = 0;
    std::vector<std::size_t> alternatives;
    std::vector<HalfBranch> half_branches;
};

struct SwitchOptions {
    std::optional<double> radius;  // defaults to the reduction's trust radius
    int grid = 48;
    /// Cosine below which two half-branch directions count as opposite.
    double pairing_cosine = -0.9;
};

SwitchResult switch_branch(const ReducedProblem& red, const Vector& incoming_tangent,
                           const SwitchOptions& opts = {});

} // namespace branchtrace::singular
