#include "helpers.hpp"

#include "branchtrace/degree.hpp"
#include "branchtrace/mcbvp.hpp"
#include "branchtrace/oracles.hpp"

#include <cmath>
#include <numbers>

using namespace branchtrace;
using namespace branchtrace::mcbvp;
using testutil::require_error;

namespace {

constexpr double kPi = std::numbers::pi;

// Sup-norm of F_h(u*) - g for u* = A sin(pi x), g the continuous residual of u*.
double manufactured_error(Index m, double lambda, double amp, double mu, double q) {
    const MeshProblem mesh({m, mu, q, 0.1});
    const Vector& x = mesh.x();
    Vector u(m), g(m);
    for (Index i = 0; i < m; ++i) {
        const double s = std::sin(kPi * x(i));
        const double c = std::cos(kPi * x(i));
        const double up = amp * kPi * c;
        const double upp = -amp * kPi * kPi * s;
        const double a = std::pow(1.0 - lambda * up * up, -1.5);
        u(i) = amp * s;
        g(i) = -a * upp - mu * u(i) + odd_power(u(i), q);
    }
    return (mesh.residual(lambda, u) - g).cwiseAbs().maxCoeff();
}

} // namespace

TEST_SUITE("mcbvp") {

TEST_CASE("the trivial line u = 0 has zero residual") {
    const MeshProblem mesh({40, 12.0, 2.0, 0.1});
    for (double lambda : {-3.0, 0.0, 2.0}) CHECK(mesh.residual(lambda, Vector::Zero(40)).norm() == 0.0);
}

TEST_CASE("lambda = 0 is the three-point Laplacian") {
    const MeshProblem mesh({30, 12.0, 2.0, 0.1});
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> v(-1.0, 1.0);
    Vector u(30);
    for (auto& x : u) x = v(rng);
    Matrix lap = Matrix::Zero(30, 30);
    const double h2 = mesh.h() * mesh.h();
    for (Index i = 0; i < 30; ++i) {
        lap(i, i) = 2.0 / h2;
        if (i > 0) lap(i, i - 1) = -1.0 / h2;
        if (i < 29) lap(i, i + 1) = -1.0 / h2;
    }
    Vector expected = lap * u;
    for (Index i = 0; i < 30; ++i) expected(i) += -12.0 * u(i) + odd_power(u(i), 2.0);
    CHECK((mesh.residual(0.0, u) - expected).cwiseAbs().maxCoeff() <= 1e-9 * expected.cwiseAbs().maxCoeff());

    Matrix jexp = lap;
    for (Index i = 0; i < 30; ++i) jexp(i, i) += -12.0 + 2.0 * std::abs(u(i));
    CHECK((mesh.jacobian(0.0, u) - jexp).cwiseAbs().maxCoeff() <= 1e-9 * jexp.cwiseAbs().maxCoeff());
}

TEST_CASE("residual of sin(pi x) with mu = pi^2, q = 2 tends to sin^2(pi x)") {
    double prev = 0.0;
    for (Index m : {49, 99, 199}) {
        const MeshProblem mesh({m, kPi * kPi + 1e-9, 2.0, 0.1});
        const Vector u = (kPi * mesh.x().array()).sin().matrix();
        const double err = (mesh.residual(0.0, u) - u.cwiseProduct(u)).cwiseAbs().maxCoeff();
        if (prev > 0.0) {
            const double order = std::log2(prev / err);
            CHECK(order >= 1.8);
            CHECK(order <= 2.2);
        }
        prev = err;
    }
}

TEST_CASE("manufactured solutions show second-order consistency on all three operators") {
    for (double lambda : {0.0, -0.5, 0.3}) {
        const double e1 = manufactured_error(49, lambda, 0.5, 12.0, 2.0);
        const double e2 = manufactured_error(99, lambda, 0.5, 12.0, 2.0);
        const double e3 = manufactured_error(199, lambda, 0.5, 12.0, 2.0);
        INFO("lambda " << lambda << " errors " << e1 << " " << e2 << " " << e3);
        for (double order : {std::log2(e1 / e2), std::log2(e2 / e3)}) {
            CHECK(order >= 1.8);
            CHECK(order <= 2.2);
        }
    }
}

TEST_CASE("Jacobian coefficient 0.5^{-3/2} at a half node with slope 1") {
    const MeshProblem mesh({9, 12.0, 2.0, 0.1});
    const Vector u = Vector::Constant(9, 0.1);  // p = 1 at both boundary half nodes, 0 inside
    const double h2 = mesh.h() * mesh.h();
    const Matrix j = mesh.jacobian(0.5, u);
    const double a = std::pow(0.5, -1.5);
    CHECK(a == doctest::Approx(2.82843).epsilon(1e-5));
    CHECK(j(0, 0) == doctest::Approx((a + 1.0) / h2 - 12.0 + 0.2).epsilon(1e-12));
    CHECK(j(8, 8) == doctest::Approx((a + 1.0) / h2 - 12.0 + 0.2).epsilon(1e-12));
    CHECK(j(0, 1) == doctest::Approx(-1.0 / h2).epsilon(1e-12));
    CHECK(j(4, 4) == doctest::Approx(2.0 / h2 - 12.0 + 0.2).epsilon(1e-12));
    CHECK(mesh.margin(0.5, u) == doctest::Approx(0.5 - 0.1).epsilon(1e-12));

    const auto sys = make_system(mesh);
    const Matrix fd = oracles::fd_jacobian(sys, Point{0.5, u}, 1e-6);
    const Matrix an = sys.jac_u(0.5, u);
    CHECK((fd - an).cwiseAbs().maxCoeff() / an.cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("analytic Jacobians match finite differences at random in-domain states") {
    const MeshProblem mesh({40, 12.0, 2.0, 0.1});
    const auto sys = make_system(mesh);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> amp(0.05, 3.0);
    std::uniform_real_distribution<double> lam(-2.0, 0.05);
    std::uniform_real_distribution<double> noise(-0.01, 0.01);
    for (int k = 0; k < 20; ++k) {
        Vector u = amp(rng) * (kPi * mesh.x().array()).sin().matrix();
        for (auto& x : u) x += noise(rng);
        const double lambda = lam(rng);
        if (!(mesh.margin(lambda, u) > 0.05)) continue;
        const auto rep = validate_consistency(sys, Point{lambda, u}, 1e-6);
        CHECK(rep.jac_u_error <= 1e-6);
        CHECK(rep.jac_lambda_error <= 1e-6);
    }
}

TEST_CASE("a non-real flux is a Domain error") {
    const MeshProblem mesh({9, 12.0, 2.0, 0.1});
    const Vector u = Vector::Constant(9, 0.1);
    require_error(ErrorKind::Domain, [&] { mesh.residual(1.0, u); });
    require_error(ErrorKind::Domain, [&] { mesh.jacobian(1.5, u); });
    require_error(ErrorKind::Shape, [&] { mesh.residual(0.0, Vector::Zero(3)); });
}

TEST_CASE("base solution for the default parameters") {
    const MeshProblem mesh({200, 12.0, 2.0, 0.1});
    const auto base = base_solution(mesh);
    CHECK(base.residual_norm <= 1e-12);
    CHECK(positivity_check(base.u0));
    CHECK(base.u0.maxCoeff() <= 12.0);
    CHECK((base.u0 - base.u0.reverse()).cwiseAbs().maxCoeff() <= 1e-10);
    // eigenvalue oracle for invertibility and index
    Eigen::SelfAdjointEigenSolver<Matrix> eig(mesh.jacobian(0.0, base.u0));
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("base solution respects the a-priori bound for mu = 2 pi^2, q = 3") {
    const MeshProblem mesh({120, 2.0 * kPi * kPi, 3.0, 0.1});
    const auto base = base_solution(mesh);
    CHECK(positivity_check(base.u0));
    CHECK(base.u0.maxCoeff() <= std::sqrt(2.0 * kPi * kPi));
}

TEST_CASE("base solution close to the bifurcation threshold") {
    const double sigma = principal_eigenvalue(60);
    const MeshProblem mesh({60, sigma + 0.2, 2.0, 0.1});
    const auto base = base_solution(mesh);
    CHECK(positivity_check(base.u0));
    CHECK(base.residual_norm <= 1e-12);
}

TEST_CASE("positivity check") {
    const MeshProblem mesh({50, 12.0, 2.0, 0.1});
    CHECK_FALSE(positivity_check(Vector::Zero(50)));
    CHECK_FALSE(positivity_check((2.0 * kPi * mesh.x().array()).sin().matrix()));
    CHECK(positivity_check((kPi * mesh.x().array()).sin().matrix()));
    CHECK_FALSE(positivity_check(Vector()));
}

TEST_CASE("principal eigenvalue") {
    CHECK(principal_eigenvalue(199) == doctest::Approx(kPi * kPi).epsilon(1e-3 / (kPi * kPi)));
    CHECK(principal_eigenvalue(9) == doctest::Approx(9.7887).epsilon(1e-5));
    CHECK(principal_eigenvalue(5000) == doctest::Approx(kPi * kPi).epsilon(1e-6));
    // dense symmetric eigen-solver as an oracle
    const Index m = 25;
    const double h = 1.0 / (m + 1);
    Matrix lap = Matrix::Zero(m, m);
    for (Index i = 0; i < m; ++i) {
        lap(i, i) = 2.0 / (h * h);
        if (i > 0) lap(i, i - 1) = lap(i - 1, i) = -1.0 / (h * h);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(lap);
    CHECK(principal_eigenvalue(m) == doctest::Approx(eig.eigenvalues()(0)).epsilon(1e-10));
    require_error(ErrorKind::Precondition, [] { principal_eigenvalue(1); });
}

TEST_CASE("margin examples") {
    const MeshProblem mesh({9, 12.0, 2.0, 0.1});
    const double h = mesh.h();
    Vector u = Vector::Zero(9);
    u(0) = std::sqrt(0.85) * h;
    CHECK(mesh.margin(1.0, u) == doctest::Approx(0.05).epsilon(1e-12));
    u(0) = std::sqrt(0.5) * h;
    CHECK(mesh.margin(2.0, u) == doctest::Approx(-0.1).epsilon(1e-12));
    CHECK(mesh.margin(-7.0, Vector::Constant(9, 3.0)) >= 0.9);
}

TEST_CASE("gradient blow-up monitor") {
    const MeshProblem mesh({200, 12.0, 2.0, 0.1});
    const auto base = base_solution(mesh);
    const auto smooth = grad_blowup_monitor(mesh, {Point{0.0, base.u0}});
    CHECK_FALSE(smooth.flagged);
    CHECK(smooth.first_flag == -1);
    // max |u0'| of the discrete profile, by one-sided difference at the walls
    const double wall = base.u0(0) / mesh.h();
    CHECK(smooth.values[0] == doctest::Approx(wall).epsilon(1e-12));

    Vector spike = Vector::Zero(200);
    spike(100) = 2e3 * mesh.h() * 1.01;
    const auto flagged = grad_blowup_monitor(mesh, {Point{0.0, base.u0}, Point{0.0, spike}});
    CHECK(flagged.flagged);
    CHECK(flagged.first_flag == 1);
    CHECK(grad_blowup_monitor(mesh, {Point{0.0, spike}}, 1e4).flagged == false);
}

TEST_CASE("base state index is +1 across mesh sizes") {
    for (Index m : {50, 100, 200}) {
        const MeshProblem mesh({m, 12.0, 2.0, 0.1});
        const auto base = base_solution(mesh);
        CHECK(degree::det_sign(mesh.jacobian(0.0, base.u0)) == 1);
    }
}

TEST_CASE("constructor validation") {
    require_error(ErrorKind::Precondition, [] { MeshProblem({1, 12.0, 2.0, 0.1}); });
    require_error(ErrorKind::Precondition, [] { MeshProblem({50, 12.0, 1.0, 0.1}); });
    require_error(ErrorKind::Precondition, [] { MeshProblem({50, 12.0, 2.0, 1.0}); });
    require_error(ErrorKind::Precondition, [] { MeshProblem({50, 12.0, 2.0, 0.0}); });
    require_error(ErrorKind::Precondition, [] { MeshProblem({50, 9.0, 2.0, 0.1}); });
}

TEST_CASE("the system is the h^2-scaled discretization") {
    const MeshProblem mesh({30, 12.0, 2.0, 0.1});
    const auto sys = make_system(mesh);
    const Vector u = 0.7 * (kPi * mesh.x().array()).sin().matrix();
    const double h2 = mesh.h() * mesh.h();
    CHECK((sys.residual(-0.4, u) - h2 * mesh.residual(-0.4, u)).norm() == 0.0);
    CHECK((sys.jac_u(-0.4, u) - h2 * mesh.jacobian(-0.4, u)).norm() == 0.0);
    CHECK(sys.n_state == 30);
    REQUIRE(sys.domain.blowup.has_value());
    CHECK(sys.domain.blowup->threshold == 1e3);
    CHECK(sys.domain.margin(-0.4, u) == mesh.margin(-0.4, u));
}

}
