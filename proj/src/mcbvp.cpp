#include "branchtrace/mcbvp.hpp"

#include "branchtrace/degree.hpp"
#include "branchtrace/errors.hpp"
#include "branchtrace/linalg.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <string>

namespace branchtrace::mcbvp {

double principal_eigenvalue(Index m) {
    if (m < 2) throw Error(ErrorKind::Precondition, "principal_eigenvalue: need m >= 2");
    const double h = 1.0 / static_cast<double>(m + 1);
    return 2.0 / (h * h) * (1.0 - std::cos(std::numbers::pi * h));
}

double odd_power(double u, double q) {
    return std::copysign(std::pow(std::abs(u), q), u);
}

MeshProblem::MeshProblem(const MeshParams& params, const simd::FluxKernels& kernels)
    : params_(params), h_(1.0 / static_cast<double>(params.m + 1)), kernels_(&kernels) {
    if (params.m < 2) throw Error(ErrorKind::Precondition, "MeshProblem: need m >= 2");
    if (!(params.q > 1.0)) throw Error(ErrorKind::Precondition, "MeshProblem: q must exceed 1");
    if (!(params.delta > 0.0 && params.delta < 1.0))
        throw Error(ErrorKind::Precondition, "MeshProblem: delta must lie in (0,1)");
    const double sigma = principal_eigenvalue(params.m);
    if (!(params.mu > sigma))
        throw Error(ErrorKind::Precondition, "MeshProblem: mu = " + std::to_string(params.mu) +
                                                 " must exceed the discrete principal eigenvalue " +
                                                 std::to_string(sigma));
    x_.resize(params.m);
    for (Index i = 0; i < params.m; ++i) x_(i) = static_cast<double>(i + 1) * h_;
}

MeshProblem::Fluxes MeshProblem::fluxes(double lambda, const Vector& u) const {
    if (u.size() != params_.m) throw Error(ErrorKind::Shape, "mcbvp: state has the wrong length");
    const auto m = static_cast<std::size_t>(params_.m);
    std::vector<double> padded(m + 2, 0.0);
    for (std::size_t i = 0; i < m; ++i) padded[i + 1] = u(static_cast<Index>(i));
    Fluxes fx{std::vector<double>(m + 1), std::vector<double>(m + 1), std::vector<double>(m + 1)};
    kernels_->slopes(padded.data(), m + 1, 1.0 / h_, fx.p.data());
    const double smin = kernels_->flux(fx.p.data(), m + 1, lambda, fx.f.data(), fx.a.data());
    if (!(smin > 0.0))
        throw Error(ErrorKind::Domain, "mcbvp: 1 - lambda p^2 <= 0 at a half node");
    return fx;
}

Vector MeshProblem::residual(double lambda, const Vector& u) const {
    const Fluxes fx = fluxes(lambda, u);
    Vector r(params_.m);
    kernels_->divergence(fx.f.data(), static_cast<std::size_t>(params_.m), 1.0 / h_, r.data());
    for (Index i = 0; i < params_.m; ++i) r(i) += -params_.mu * u(i) + odd_power(u(i), params_.q);
    return r;
}

Matrix MeshProblem::jacobian(double lambda, const Vector& u) const {
    const Fluxes fx = fluxes(lambda, u);
    const Index m = params_.m;
    const double inv_h2 = 1.0 / (h_ * h_);
    Matrix j = Matrix::Zero(m, m);
    for (Index i = 0; i < m; ++i) {
        const double left = fx.a[static_cast<std::size_t>(i)];
        const double right = fx.a[static_cast<std::size_t>(i + 1)];
        j(i, i) = (left + right) * inv_h2 - params_.mu +
                  params_.q * std::pow(std::abs(u(i)), params_.q - 1.0);
        if (i > 0) j(i, i - 1) = -left * inv_h2;
        if (i + 1 < m) j(i, i + 1) = -right * inv_h2;
    }
    return j;
}

Vector MeshProblem::jac_lambda(double lambda, const Vector& u) const {
    const Fluxes fx = fluxes(lambda, u);
    // d/dlambda [p / sqrt(1 - lambda p^2)] = p^3 a / 2
    std::vector<double> g(fx.p.size());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = 0.5 * fx.p[k] * fx.p[k] * fx.p[k] * fx.a[k];
    Vector r(params_.m);
    kernels_->divergence(g.data(), static_cast<std::size_t>(params_.m), 1.0 / h_, r.data());
    return r;
}

Vector MeshProblem::slopes(const Vector& u) const {
    if (u.size() != params_.m) throw Error(ErrorKind::Shape, "mcbvp: state has the wrong length");
    const auto m = static_cast<std::size_t>(params_.m);
    std::vector<double> padded(m + 2, 0.0);
    for (std::size_t i = 0; i < m; ++i) padded[i + 1] = u(static_cast<Index>(i));
    Vector p(params_.m + 1);
    kernels_->slopes(padded.data(), m + 1, 1.0 / h_, p.data());
    return p;
}

double MeshProblem::margin(double lambda, const Vector& u) const {
    const Vector p = slopes(u);
    const double max_sq = kernels_->max_square(p.data(), static_cast<std::size_t>(p.size()));
    return 1.0 - lambda * max_sq - params_.delta;
}

double MeshProblem::max_gradient(const Vector& u) const {
    const Vector p = slopes(u);
    return std::sqrt(kernels_->max_square(p.data(), static_cast<std::size_t>(p.size())));
}

// ---------------------------------------------------------------------------
// Base solution at lambda = 0
// ---------------------------------------------------------------------------

namespace {

struct NewtonRun {
    Vector u;
    double norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

NewtonRun newton_at_zero(const MeshProblem& mesh, Vector u, double tol, int max_iter = 100) {
    const double h2 = mesh.h() * mesh.h();
    Vector r = h2 * mesh.residual(0.0, u);
    double norm = r.norm();
    int it = 0;
    for (; it < max_iter && norm > tol; ++it) {
        const Matrix j = h2 * mesh.jacobian(0.0, u);
        const Vector step = j.partialPivLu().solve(r);
        if (!step.allFinite()) break;
        double alpha = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
            const Vector trial = u - alpha * step;
            const Vector rt = h2 * mesh.residual(0.0, trial);
            if (rt.allFinite() && rt.norm() < norm) {
                u = trial;
                r = rt;
                norm = rt.norm();
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    return {u, norm, it, norm <= tol};
}

bool acceptable(const NewtonRun& run) {
    return run.converged && positivity_check(run.u);
}

} // namespace

BaseSolution base_solution(const MeshProblem& mesh, double tol) {
    const double c0 = 0.5 * std::pow(mesh.mu(), 1.0 / (mesh.q() - 1.0));
    const Vector shape = (std::numbers::pi * mesh.x().array()).sin().matrix();

    double c = c0;
    for (int attempt = 0; attempt < 4; ++attempt, c *= 2.0) {
        const NewtonRun run = newton_at_zero(mesh, c * shape, tol);
        if (acceptable(run)) return {run.u, run.norm, run.iterations, false};
    }

    // Fallback: continuation in mu from just above the principal eigenvalue.
    const double sigma = principal_eigenvalue(mesh.m());
    constexpr int kSteps = 40;
    MeshParams p = mesh.params();
    Vector u;
    int total_iterations = 0;
    for (int k = 1; k <= kSteps; ++k) {
        p.mu = sigma + (mesh.mu() - sigma) * static_cast<double>(k) / kSteps;
        const MeshProblem stage(p);
        if (k == 1) u = std::pow(p.mu - sigma, 1.0 / (p.q - 1.0)) * shape;
        const NewtonRun run = newton_at_zero(stage, u, tol);
        total_iterations += run.iterations;
        if (!acceptable(run))
            throw Error(ErrorKind::Initialization,
                        "base_solution: Newton failed during mu continuation at mu = " +
                            std::to_string(p.mu));
        u = run.u;
    }
    const NewtonRun final_run = newton_at_zero(mesh, u, tol);
    if (!acceptable(final_run))
        throw Error(ErrorKind::Initialization, "base_solution: no positive solution found");
    return {final_run.u, final_run.norm, total_iterations + final_run.iterations, true};
}

bool positivity_check(const Vector& u) {
    return u.size() > 0 && (u.array() > 0.0).all();
}

GradientTrajectory grad_blowup_monitor(const MeshProblem& mesh, const std::vector<Point>& points,
                                       double threshold) {
    GradientTrajectory out;
    out.values.reserve(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) {
        const double g = mesh.max_gradient(points[k].u);
        out.values.push_back(g);
        if (g > threshold && !out.flagged) {
            out.flagged = true;
            out.first_flag = static_cast<std::ptrdiff_t>(k);
        }
    }
    return out;
}

ParameterizedSystem make_system(const MeshProblem& mesh, const SystemOptions& opts) {
    auto shared = std::make_shared<const MeshProblem>(mesh);
    const double h2 = mesh.h() * mesh.h();
    ParameterizedSystem s;
    s.name = "mcbvp";
    s.n_state = mesh.m();
    s.residual = [shared, h2](double l, const Vector& u) -> Vector { return h2 * shared->residual(l, u); };
    s.jac_u = [shared, h2](double l, const Vector& u) -> Matrix { return h2 * shared->jacobian(l, u); };
    s.jac_lambda = [shared, h2](double l, const Vector& u) -> Vector {
        return h2 * shared->jac_lambda(l, u);
    };
    s.domain.margin = [shared](double l, const Vector& u) { return shared->margin(l, u); };
    s.domain.base_lambda = 0.0;
    s.domain.lambda_min = opts.lambda_min;
    s.domain.lambda_max = opts.lambda_max;
    s.domain.norm_cap = opts.norm_cap;
    s.domain.boundary_threshold = opts.boundary_threshold;
    s.domain.blowup = BlowupMonitor{"max_gradient",
                                    [shared](const Point& p) { return shared->max_gradient(p.u); },
                                    opts.gradient_threshold};
    return s;
}

} // namespace branchtrace::mcbvp
