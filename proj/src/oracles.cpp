#include "branchtrace/oracles.hpp"

#include "branchtrace/errors.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <numbers>
#include <string>

namespace branchtrace::oracles {

namespace {

Vector eval(const ParameterizedSystem& system, double lambda, const Vector& u) {
    Vector r = system.residual(lambda, u);
    if (!r.allFinite())
        throw Error(ErrorKind::Evaluation, "finite difference: non-finite residual");
    return r;
}

void require_inside(const ParameterizedSystem& system, double lambda, const Vector& u) {
    if (system.domain.margin && !(system.domain.margin(lambda, u) > 0.0))
        throw Error(ErrorKind::Domain,
                    "finite difference stencil leaves the domain; shrink the step");
}

} // namespace

Matrix fd_jacobian(const ParameterizedSystem& system, const Point& point, double h_fd) {
    const Index n = point.u.size();
    Matrix jac(n, n);
    Vector up = point.u;
    Vector um = point.u;
    for (Index j = 0; j < n; ++j) {
        const double step = h_fd * (1.0 + std::abs(point.u(j)));
        up(j) = point.u(j) + step;
        um(j) = point.u(j) - step;
        require_inside(system, point.lambda, up);
        require_inside(system, point.lambda, um);
        jac.col(j) = (eval(system, point.lambda, up) - eval(system, point.lambda, um)) / (2.0 * step);
        up(j) = point.u(j);
        um(j) = point.u(j);
    }
    return jac;
}

Matrix fd_jacobian_forward(const ParameterizedSystem& system, const Point& point, double h_fd) {
    const Index n = point.u.size();
    Matrix jac(n, n);
    const Vector base = eval(system, point.lambda, point.u);
    Vector up = point.u;
    for (Index j = 0; j < n; ++j) {
        const double step = h_fd * (1.0 + std::abs(point.u(j)));
        up(j) = point.u(j) + step;
        require_inside(system, point.lambda, up);
        jac.col(j) = (eval(system, point.lambda, up) - base) / step;
        up(j) = point.u(j);
    }
    return jac;
}

Vector fd_lambda_derivative(const ParameterizedSystem& system, const Point& point, double h_fd) {
    const double step = h_fd * (1.0 + std::abs(point.lambda));
    require_inside(system, point.lambda + step, point.u);
    require_inside(system, point.lambda - step, point.u);
    return (eval(system, point.lambda + step, point.u) - eval(system, point.lambda - step, point.u)) /
           (2.0 * step);
}

// ---------------------------------------------------------------------------
// Shooting
// ---------------------------------------------------------------------------

namespace {

struct ShotOutcome {
    double phi = 0.0;  // signed terminal functional, zero at the positive solution
    bool domain_violation = false;
};

double odd_power(double u, double q) {
    return std::copysign(std::pow(std::abs(u), q), u);
}

// u'' = (1 - lambda v^2)^{3/2} (u^q - mu u), v = u'
struct Rhs {
    double mu, q, lambda;
    bool operator()(double u, double v, double& du, double& dv) const {
        const double s = 1.0 - lambda * v * v;
        if (!(s > 0.0)) return false;
        du = v;
        dv = s * std::sqrt(s) * (odd_power(u, q) - mu * u);
        return true;
    }
};

/// Integrates one shot with `substeps` RK4 steps per mesh cell. When `nodes`
/// is non-null the state at each interior node is stored.
ShotOutcome shoot(const Rhs& rhs, double slope, Index m, int substeps, Vector* nodes) {
    const double h = 1.0 / static_cast<double>(m + 1);
    const double dt = h / substeps;
    double u = 0.0;
    double v = slope;
    constexpr double kBlowup = 1e8;
    for (Index cell = 0; cell <= m; ++cell) {
        for (int k = 0; k < substeps; ++k) {
            double k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v;
            if (!rhs(u, v, k1u, k1v) ||
                !rhs(u + 0.5 * dt * k1u, v + 0.5 * dt * k1v, k2u, k2v) ||
                !rhs(u + 0.5 * dt * k2u, v + 0.5 * dt * k2v, k3u, k3v) ||
                !rhs(u + dt * k3u, v + dt * k3v, k4u, k4v)) {
                return {0.0, true};
            }
            const double un = u + dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            const double vn = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            if (!std::isfinite(un) || std::abs(un) > kBlowup) return {kBlowup, false};
            const bool last_step = cell == m && k == substeps - 1;
            if (un <= 0.0 && !last_step) {
                // first zero before x = 1: linear interpolation of the crossing
                const double x0 = (static_cast<double>(cell) * substeps + k) * dt;
                const double xc = x0 + dt * u / (u - un);
                return {-(1.0 - xc), false};
            }
            u = un;
            v = vn;
        }
        if (nodes && cell < m) (*nodes)(cell) = u;
    }
    return {u, false};
}

} // namespace

ShootingResult shooting_solve(double mu, double q, double lambda, Index m, const ShootingConfig& cfg) {
    if (!(cfg.ode_step > 0.0)) throw Error(ErrorKind::Precondition, "shooting: ode_step must be > 0");
    if (m < 1) throw Error(ErrorKind::Precondition, "shooting: need at least one interior node");
    const double h = 1.0 / static_cast<double>(m + 1);
    const int substeps = static_cast<int>(std::ceil(h / cfg.ode_step - 1e-9));
    const Rhs rhs{mu, q, lambda};

    double lo = cfg.slope_lo;
    double hi = cfg.slope_hi;
    if (!(hi > 0.0)) {
        hi = 1e3;
        if (lambda > 0.0) hi = std::min(hi, (1.0 - 1e-6) / std::sqrt(lambda));
    }
    auto phi = [&](double s) {
        const ShotOutcome out = shoot(rhs, s, m, substeps, nullptr);
        if (out.domain_violation)
            throw Error(ErrorKind::Domain,
                        "shooting: 1 - lambda u'^2 <= 0 during the shot at lambda = " +
                            std::to_string(lambda));
        return out.phi;
    };
    double f_lo = phi(lo);
    const double f_hi = phi(hi);
    if (!(f_lo < 0.0 && f_hi > 0.0))
        throw Error(ErrorKind::Bracket, "shooting: no sign change of the terminal value in the slope bracket");

    int it = 0;
    double mid = 0.5 * (lo + hi);
    double f_mid = 0.0;
    for (; it < cfg.max_bisections; ++it) {
        mid = 0.5 * (lo + hi);
        f_mid = phi(mid);
        if (std::abs(f_mid) <= cfg.bisect_tol || hi - lo <= 1e-15 * hi) break;
        if (f_mid < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    ShootingResult result;
    result.slope = mid;
    result.nodes = Vector::Zero(m);
    result.terminal_value = f_mid;
    result.bisections = it;
    shoot(rhs, mid, m, substeps, &result.nodes);
    return result;
}

// ---------------------------------------------------------------------------
// Brute-force degree
// ---------------------------------------------------------------------------

bool Box::contains(const Vector& v) const {
    return (v.array() > lower.array()).all() && (v.array() < upper.array()).all();
}

namespace {

int degree_1d(const SliceMap& f, const Box& box, int grid_n) {
    const double a = box.lower(0);
    const double b = box.upper(0);
    Vector x(1);
    auto val = [&](double t) {
        x(0) = t;
        return f(x)(0);
    };
    int degree = 0;
    double prev = val(a);
    if (prev == 0.0) throw Error(ErrorKind::Admissibility, "brute_force_degree: zero on the boundary");
    for (int i = 1; i <= grid_n; ++i) {
        const double t = a + (b - a) * static_cast<double>(i) / grid_n;
        double cur = val(t);
        if (cur == 0.0) {
            if (i == grid_n) throw Error(ErrorKind::Admissibility, "brute_force_degree: zero on the boundary");
            // nudge off an exact grid hit
            cur = val(t + 1e-3 * (b - a) / grid_n);
        }
        if ((prev < 0.0) != (cur < 0.0)) degree += cur > 0.0 ? 1 : -1;
        prev = cur;
    }
    return degree;
}

int degree_2d(const SliceMap& f, const Box& box, int grid_n) {
    const Vector& lo = box.lower;
    const Vector& hi = box.upper;
    // counter-clockwise corners
    const double cx[5] = {lo(0), hi(0), hi(0), lo(0), lo(0)};
    const double cy[5] = {lo(1), lo(1), hi(1), hi(1), lo(1)};
    Vector p(2);
    auto angle_at = [&](double x, double y) {
        p << x, y;
        const Vector v = f(p);
        if (v.norm() == 0.0) throw Error(ErrorKind::Admissibility, "brute_force_degree: zero on the boundary");
        return std::atan2(v(1), v(0));
    };
    double total = 0.0;
    double prev = angle_at(cx[0], cy[0]);
    for (int side = 0; side < 4; ++side) {
        for (int i = 1; i <= grid_n; ++i) {
            const double t = static_cast<double>(i) / grid_n;
            const double cur = angle_at(cx[side] + t * (cx[side + 1] - cx[side]),
                                        cy[side] + t * (cy[side + 1] - cy[side]));
            double d = cur - prev;
            if (d > std::numbers::pi) d -= 2.0 * std::numbers::pi;
            if (d < -std::numbers::pi) d += 2.0 * std::numbers::pi;
            if (std::abs(d) > 0.5 * std::numbers::pi)
                throw Error(ErrorKind::Refine, "brute_force_degree: angle step exceeds pi/2; refine grid_n");
            total += d;
            prev = cur;
        }
    }
    return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

} // namespace

int brute_force_degree(const SliceMap& f, const Box& box, int grid_n) {
    if (box.upper.size() != box.lower.size())
        throw Error(ErrorKind::Shape, "brute_force_degree: box bounds differ in size");
    if (grid_n < 1) throw Error(ErrorKind::Precondition, "brute_force_degree: grid_n must be positive");
    switch (box.dim()) {
    case 1: return degree_1d(f, box, grid_n);
    case 2: return degree_2d(f, box, grid_n);
    default:
        throw Error(ErrorKind::Unsupported, "brute_force_degree: only dimensions 1 and 2");
    }
}

} // namespace branchtrace::oracles

namespace branchtrace::oracles {

namespace {

// Draws k points in [-limit, limit]^dim with pairwise distance >= gap.
std::vector<Vector> separated_points(std::mt19937_64& rng, int k, int dim, double limit, double gap) {
    std::uniform_real_distribution<double> pos(-limit, limit);
    std::vector<Vector> out;
    while (static_cast<int>(out.size()) < k) {
        Vector p(dim);
        for (int d = 0; d < dim; ++d) p(d) = pos(rng);
        bool ok = true;
        for (const auto& q : out) ok = ok && (p - q).norm() >= gap;
        if (ok) out.push_back(p);
    }
    return out;
}

} // namespace

PolynomialSlice random_polynomial_slice(std::uint64_t seed, int dim) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> count(1, dim == 1 ? 4 : 3);
    std::bernoulli_distribution coin(0.5);
    PolynomialSlice s;
    s.box.lower = Vector::Constant(dim, -2.0);
    s.box.upper = Vector::Constant(dim, 2.0);
    const int k = count(rng);
    s.roots = separated_points(rng, k, dim, 1.6, 0.15);

    if (dim == 1) {
        const double c = coin(rng) ? 1.0 : -1.0;
        std::vector<double> r;
        for (const auto& v : s.roots) r.push_back(v(0));
        s.f = [c, r](const Vector& u) {
            double p = c;
            for (double ri : r) p *= u(0) - ri;
            return Vector::Constant(1, p);
        };
        s.jac = [c, r](const Vector& u) {
            double d = 0.0;
            for (std::size_t i = 0; i < r.size(); ++i) {
                double term = c;
                for (std::size_t j = 0; j < r.size(); ++j)
                    if (j != i) term *= u(0) - r[j];
                d += term;
            }
            return Matrix::Constant(1, 1, d);
        };
        // slope sign at each simple root
        for (std::size_t i = 0; i < r.size(); ++i) {
            double term = c;
            for (std::size_t j = 0; j < r.size(); ++j)
                if (j != i) term *= r[i] - r[j];
            s.expected_degree += term > 0.0 ? 1 : -1;
        }
        return s;
    }
    if (dim != 2) throw Error(ErrorKind::Unsupported, "random_polynomial_slice: dimension 1 or 2 only");

    using C = std::complex<double>;
    std::vector<C> r;
    std::vector<bool> holo;
    for (const auto& v : s.roots) {
        r.emplace_back(v(0), v(1));
        holo.push_back(coin(rng));
        s.expected_degree += holo.back() ? 1 : -1;
    }
    auto factor = [r, holo](std::size_t i, const C& w) {
        const C d = w - r[i];
        return holo[i] ? d : std::conj(d);
    };
    s.f = [r, factor](const Vector& u) {
        const C w(u(0), u(1));
        C p(1.0, 0.0);
        for (std::size_t i = 0; i < r.size(); ++i) p *= factor(i, w);
        Vector out(2);
        out << p.real(), p.imag();
        return out;
    };
    s.jac = [r, holo, factor](const Vector& u) {
        const C w(u(0), u(1));
        C du(0.0, 0.0), dv(0.0, 0.0);
        for (std::size_t i = 0; i < r.size(); ++i) {
            C rest(1.0, 0.0);
            for (std::size_t j = 0; j < r.size(); ++j)
                if (j != i) rest *= factor(j, w);
            du += rest;
            dv += rest * (holo[i] ? C(0.0, 1.0) : C(0.0, -1.0));
        }
        Matrix j(2, 2);
        j << du.real(), dv.real(), du.imag(), dv.imag();
        return j;
    };
    return s;
}

} // namespace branchtrace::oracles
