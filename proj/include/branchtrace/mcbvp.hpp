#pragma once

// Finite-difference discretization of
//   -(u' / sqrt(1 - lambda u'^2))' = mu u - u^q  on (0,1),  u(0) = u(1) = 0,
// the mean-curvature operator for lambda < 0, the Laplacian at lambda = 0 and
// the Minkowski operator for lambda > 0.

#include "branchtrace/problem_model.hpp"
#include "branchtrace/simd/kernels.hpp"

#include <vector>

namespace branchtrace::mcbvp {

/// Smallest eigenvalue of (1/h^2) tridiag(-1, 2, -1) on m interior nodes:
/// (2/h^2)(1 - cos(pi h)), h = 1/(m+1).
double principal_eigenvalue(Index m);

struct MeshParams {
    Index m = 200;
    double mu = 12.0;
    double q = 2.0;
    double delta = 0.1;
};

/// Uniform mesh on (0,1) with the problem parameters. Immutable.
class MeshProblem {
public:
    explicit MeshProblem(const MeshParams& params,
                         const simd::FluxKernels& kernels = simd::active());

    Index m() const { return params_.m; }
    double h() const { return h_; }
    double mu() const { return params_.mu; }
    double q() const { return params_.q; }
    double delta() const { return params_.delta; }
    const MeshParams& params() const { return params_; }
    const Vector& x() const { return x_; }
    simd::Backend backend() const { return kernels_->backend; }

    /// Conservative flux-difference residual (unscaled).
    Vector residual(double lambda, const Vector& u) const;
    /// Tridiagonal D_uF as a dense matrix (unscaled).
    Matrix jacobian(double lambda, const Vector& u) const;
    /// D_lambdaF (unscaled).
    Vector jac_lambda(double lambda, const Vector& u) const;

    /// 1 - lambda * max p^2 - delta over the m+1 half-node slopes.
    double margin(double lambda, const Vector& u) const;
    /// Half-node slopes p_{i+1/2}, with the boundary values u_0 = u_{m+1} = 0.
    Vector slopes(const Vector& u) const;
    /// max |p_{i+1/2}|.
    double max_gradient(const Vector& u) const;

private:
    struct Fluxes {
        std::vector<double> p, f, a;
    };
    Fluxes fluxes(double lambda, const Vector& u) const;

    MeshParams params_;
    double h_;
    Vector x_;
    const simd::FluxKernels* kernels_;
};

/// u^q extended oddly: sign(u) |u|^q.
double odd_power(double u, double q);

struct BaseSolution {
    Vector u0;
    double residual_norm = 0.0;  // Euclidean norm of the h^2-scaled residual
    int newton_iterations = 0;
    bool used_mu_continuation = false;
};

/// Positive solution at lambda = 0 by damped Newton from c sin(pi x),
/// c = mu^{1/(q-1)} / 2.
BaseSolution base_solution(const MeshProblem& mesh, double tol = 1e-12);

bool positivity_check(const Vector& u);

struct GradientTrajectory {
    std::vector<double> values;  // max |p| per point
    bool flagged = false;
    std::ptrdiff_t first_flag = -1;
};

GradientTrajectory grad_blowup_monitor(const MeshProblem& mesh, const std::vector<Point>& points,
                                       double threshold = 1e3);

struct SystemOptions {
    double lambda_min = -5.0;
    double lambda_max = 5.0;
    double norm_cap = 1e6;
    double boundary_threshold = 1e-3;
    double gradient_threshold = 1e3;
};

/// The discretization as a ParameterizedSystem. Residual and Jacobians are
/// multiplied by h^2, which leaves zeros, tangents and determinant signs
/// unchanged and keeps the residual floor near machine precision.
ParameterizedSystem make_system(const MeshProblem& mesh, const SystemOptions& opts = {});

} // namespace branchtrace::mcbvp
