#include "branchtrace/singular.hpp"

#include "branchtrace/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace branchtrace::singular {

namespace {

// Fix the sign of each basis column so its largest-magnitude entry is positive.
void normalize_signs(Matrix& basis) {
    for (Index c = 0; c < basis.cols(); ++c) {
        Index arg = 0;
        basis.col(c).cwiseAbs().maxCoeff(&arg);
        if (basis(arg, c) < 0.0) basis.col(c) = -basis.col(c);
    }
}

Vector residual_at(const ParameterizedSystem& system, double lambda, const Vector& u) {
    Vector r = system.residual(lambda, u);
    if (!r.allFinite()) throw Error(ErrorKind::Evaluation, "singular: non-finite residual");
    return r;
}

} // namespace

KernelAnalysis kernel_analysis(const ParameterizedSystem& system, const Point& point, double rank_tol,
                               double residual_tol) {
    const Vector r = residual_at(system, point.lambda, point.u);
    if (r.norm() > residual_tol)
        throw Error(ErrorKind::NotAZero,
                    "kernel_analysis: residual norm " + std::to_string(r.norm()) + " exceeds tolerance");
    const Matrix j = system.jac_u(point.lambda, point.u);
    Eigen::BDCSVD<Matrix> svd(j, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    const Index n = s.size();
    const double largest = n > 0 ? s(0) : 0.0;
    Index k = 0;
    for (Index i = 0; i < n; ++i)
        if (s(i) <= rank_tol * largest || largest == 0.0) ++k;

    KernelAnalysis out;
    out.kernel_dim = k;
    out.singular_values = s;
    out.kernel_basis = svd.matrixV().rightCols(k);
    out.cokernel_basis = svd.matrixU().rightCols(k);
    normalize_signs(out.kernel_basis);
    normalize_signs(out.cokernel_basis);
    return out;
}

ReducedProblem ls_reduce(const ParameterizedSystem& system, const Point& point, const ReductionOptions& opts) {
    const KernelAnalysis ka = kernel_analysis(system, point, opts.rank_tol, opts.residual_tol);
    if (ka.kernel_dim == 0)
        throw Error(ErrorKind::Precondition, "ls_reduce: D_uF is regular at this point");

    const Matrix j = system.jac_u(point.lambda, point.u);
    Eigen::BDCSVD<Matrix> svd(j, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Index n = j.rows();
    const Index k = ka.kernel_dim;

    ReducedProblem red;
    red.system = system;
    red.singular_point = point;
    red.kernel_dim = k;
    red.kernel_basis = ka.kernel_basis;
    red.cokernel_basis = ka.cokernel_basis;
    red.complement_basis = svd.matrixV().leftCols(n - k);
    red.range_basis = svd.matrixU().leftCols(n - k);
    red.projector_P = red.kernel_basis * red.kernel_basis.transpose();
    red.projector_Q = Matrix::Identity(n, n) - red.cokernel_basis * red.cokernel_basis.transpose();
    red.psi_tolerance = opts.psi_tolerance;
    red.psi_max_iter = opts.psi_max_iter;
    red.trust_radius = opts.trust_radius;

    if (n - k > 0) {
        const Matrix block = red.range_basis.transpose() * j * red.complement_basis;
        Eigen::JacobiSVD<Matrix> bs(block);
        const Vector& bsv = bs.singularValues();
        const double jmax = ka.singular_values(0);
        if (!(bsv(bsv.size() - 1) > opts.rank_tol * jmax))
            throw Error(ErrorKind::Reduction, "ls_reduce: complement block Q D_uF |_Y is singular");
    }

    const ComplementSolve at_point = solve_complement(red, point.lambda, Vector::Zero(n));
    if (at_point.y.norm() > 1e-8 * (1.0 + point.u.norm()))
        throw Error(ErrorKind::Reduction, "ls_reduce: psi(lambda1, 0) does not vanish");
    return red;
}

ComplementSolve solve_complement(const ReducedProblem& red, double lambda, const Vector& x) {
    const Index n = red.singular_point.u.size();
    const Index rest = red.complement_basis.cols();
    ComplementSolve out{Vector::Zero(n), 0};
    if (rest == 0) return out;

    const Vector base = red.singular_point.u + x;
    Vector eta = Vector::Zero(rest);
    try {
        for (int it = 0; it <= red.psi_max_iter; ++it) {
            const Vector u = base + red.complement_basis * eta;
            const Vector r = red.range_basis.transpose() * residual_at(red.system, lambda, u);
            if (r.norm() <= red.psi_tolerance) {
                out.y = red.complement_basis * eta;
                out.iterations = it;
                return out;
            }
            const Matrix block =
                red.range_basis.transpose() * red.system.jac_u(lambda, u) * red.complement_basis;
            const Vector step = block.partialPivLu().solve(r);
            if (!step.allFinite()) break;
            eta -= step;
        }
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Domain && e.kind() != ErrorKind::Evaluation) throw;
    }
    throw Error(ErrorKind::TrustRegion,
                "solve_complement: inner Newton for psi did not converge; reduce the trust radius");
}

namespace {

void check_trust_region(const ReducedProblem& red, double lambda, const Vector& z) {
    if (z.size() != red.kernel_dim) throw Error(ErrorKind::Shape, "reduced coordinate has the wrong length");
    const double slack = red.trust_radius * (1.0 + 1e-12);
    if (std::abs(lambda - red.singular_point.lambda) > slack || z.norm() > slack)
        throw Error(ErrorKind::TrustRegion, "reduced point outside the trust region");
}

} // namespace

Vector eval_reduced(const ReducedProblem& red, double lambda, const Vector& z) {
    check_trust_region(red, lambda, z);
    const Vector x = red.kernel_basis * z;
    const ComplementSolve psi = solve_complement(red, lambda, x);
    const Vector u = red.singular_point.u + x + psi.y;
    return red.cokernel_basis.transpose() * residual_at(red.system, lambda, u);
}

Point lift(const ReducedProblem& red, double lambda, const Vector& z) {
    check_trust_region(red, lambda, z);
    const Vector x = red.kernel_basis * z;
    const ComplementSolve psi = solve_complement(red, lambda, x);
    return Point{lambda, red.singular_point.u + x + psi.y};
}

std::pair<double, Vector> project(const ReducedProblem& red, const Point& point) {
    return {point.lambda, red.kernel_basis.transpose() * (point.u - red.singular_point.u)};
}

// ---------------------------------------------------------------------------
// Half-branch enumeration
// ---------------------------------------------------------------------------

namespace {

struct PlanePoint {
    double dl;  // lambda - lambda1
    double z;
};

double g_on_circle(const ReducedProblem& red, double r, double theta) {
    Vector z(1);
    z(0) = r * std::sin(theta);
    return eval_reduced(red, red.singular_point.lambda + r * std::cos(theta), z)(0);
}

std::vector<PlanePoint> zeros_on_circle(const ReducedProblem& red, double r, int n_theta) {
    const double step = 2.0 * std::numbers::pi / n_theta;
    std::vector<double> values(static_cast<std::size_t>(n_theta));
    for (int j = 0; j < n_theta; ++j)
        values[static_cast<std::size_t>(j)] = g_on_circle(red, r, (j + 0.5) * step);

    std::vector<PlanePoint> out;
    for (int j = 0; j < n_theta; ++j) {
        const double ga = values[static_cast<std::size_t>(j)];
        const double gb = values[static_cast<std::size_t>((j + 1) % n_theta)];
        if ((ga < 0.0) == (gb < 0.0)) continue;
        double lo = (j + 0.5) * step;
        double hi = lo + step;
        double glo = ga;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double gm = g_on_circle(red, r, mid);
            if ((gm < 0.0) == (glo < 0.0)) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        const double theta = 0.5 * (lo + hi);
        out.push_back({r * std::cos(theta), r * std::sin(theta)});
    }
    return out;
}

double dist(const PlanePoint& a, const PlanePoint& b) { return std::hypot(a.dl - b.dl, a.z - b.z); }

std::vector<HalfBranch> enumerate_at_radius(const ReducedProblem& red, double radius, int grid) {
    const int levels = std::max(grid, 2);
    const int n_theta = std::max(96, 4 * grid);
    std::vector<std::vector<PlanePoint>> rings;
    rings.reserve(static_cast<std::size_t>(levels));
    for (int k = 0; k < levels; ++k) {
        const double r = radius * std::pow(10.0, -3.0 * (1.0 - static_cast<double>(k) / (levels - 1)));
        rings.push_back(zeros_on_circle(red, r, n_theta));
    }

    // chains are grown inward from the outermost ring
    const auto& outer = rings.back();
    std::vector<std::vector<PlanePoint>> chains;
    for (const auto& p : outer) chains.push_back({p});
    for (int k = levels - 2; k >= 0; --k) {
        const auto& ring = rings[static_cast<std::size_t>(k)];
        if (ring.size() != chains.size()) break;
        std::vector<int> taken(ring.size(), -1);
        bool bijective = true;
        for (std::size_t c = 0; c < chains.size() && bijective; ++c) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < ring.size(); ++i)
                if (dist(ring[i], chains[c].back()) < dist(ring[best], chains[c].back())) best = i;
            if (taken[best] >= 0) bijective = false;
            taken[best] = static_cast<int>(c);
        }
        if (!bijective) break;
        for (std::size_t i = 0; i < ring.size(); ++i) chains[static_cast<std::size_t>(taken[i])].push_back(ring[i]);
    }

    std::vector<HalfBranch> out;
    for (auto& chain : chains) {
        std::reverse(chain.begin(), chain.end());
        HalfBranch hb;
        for (const auto& p : chain) {
            const double lambda = red.singular_point.lambda + p.dl;
            Vector z(1);
            z(0) = p.z;
            hb.lambdas.push_back(lambda);
            hb.z.push_back(z);
            hb.points.push_back(lift(red, lambda, z));
        }
        hb.direction = Vector(2);
        hb.direction << chain.front().dl, chain.front().z;
        hb.direction.normalize();
        out.push_back(std::move(hb));
    }
    std::sort(out.begin(), out.end(), [&](const HalfBranch& a, const HalfBranch& b) {
        auto theta = [&](const HalfBranch& hb) {
            const double t = std::atan2(hb.z.back()(0), hb.lambdas.back() - red.singular_point.lambda);
            return t < 0.0 ? t + 2.0 * std::numbers::pi : t;
        };
        return theta(a) < theta(b);
    });
    return out;
}

} // namespace

std::vector<HalfBranch> enumerate_branches(const ReducedProblem& red, double radius, int grid) {
    if (red.kernel_dim != 1)
        throw Error(ErrorKind::Unsupported, "enumerate_branches: only kernel dimension 1 is supported");
    if (!(radius > 0.0)) throw Error(ErrorKind::Precondition, "enumerate_branches: radius must be positive");

    const Point& sp = red.singular_point;
    const Matrix j = red.system.jac_u(sp.lambda, sp.u);
    const double dzg = (red.cokernel_basis.transpose() * j * red.kernel_basis)(0, 0);
    const double scale = std::max(1.0, j.norm());
    if (std::abs(dzg) > 1e-6 * scale)
        throw Error(ErrorKind::Precondition,
                    "enumerate_branches: D_zG does not vanish; the reduced map is regular here");

    ReducedProblem local = red;
    double r = std::min(radius, red.trust_radius);
    local.trust_radius = r;
    for (int attempt = 0; attempt < 6; ++attempt) {
        try {
            return enumerate_at_radius(local, r, grid);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::TrustRegion) throw;
            r *= 0.5;
            local.trust_radius = r;
        }
    }
    throw Error(ErrorKind::TrustRegion, "enumerate_branches: inner Newton fails even on a small patch");
}

// ---------------------------------------------------------------------------
// Puiseux exponent
// ---------------------------------------------------------------------------

namespace {

struct LineFit {
    double slope = 0.0;
    double rms = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    LineFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    const double icpt = (sy - f.slope * sx) / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (icpt + f.slope * x[i]);
        ss += e * e;
    }
    f.rms = std::sqrt(ss / n);
    return f;
}

double decades(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return std::log10(*hi / *lo);
}

} // namespace

PuiseuxFit puiseux_exponent(const std::vector<Point>& half_branch, const Point& singular_point) {
    if (half_branch.size() < 8)
        throw Error(ErrorKind::Precondition, "puiseux_exponent: need at least 8 points");
    std::vector<double> dl, du;
    double max_dl = 0.0, max_du = 0.0;
    for (const auto& p : half_branch) {
        dl.push_back(std::abs(p.lambda - singular_point.lambda));
        du.push_back((p.u - singular_point.u).norm());
        max_dl = std::max(max_dl, dl.back());
        max_du = std::max(max_du, du.back());
    }
    PuiseuxFit fit;
    const bool state_flat = std::all_of(du.begin(), du.end(), [&](double v) { return v <= 1e-10 * max_dl; });
    const bool lambda_flat = std::all_of(dl.begin(), dl.end(), [&](double v) { return v <= 1e-10 * max_du; });
    if (state_flat) {
        fit.kind = FitKind::DegenerateState;
        fit.points_used = half_branch.size();
        return fit;
    }
    if (lambda_flat) {
        fit.kind = FitKind::DegenerateLambda;
        fit.exponent = std::numeric_limits<double>::infinity();
        fit.points_used = half_branch.size();
        return fit;
    }

    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < dl.size(); ++i) {
        if (dl[i] > 0.0 && du[i] > 0.0) {
            lx.push_back(dl[i]);
            ly.push_back(du[i]);
        }
    }
    if (lx.size() < 8) throw Error(ErrorKind::Precondition, "puiseux_exponent: too few usable points");
    const bool lambda_spans = decades(lx) >= 2.0;
    const bool state_spans = decades(ly) >= 2.0;
    if (!lambda_spans && !state_spans)
        throw Error(ErrorKind::Precondition, "puiseux_exponent: samples must span two decades");

    std::vector<double> log_l, log_u;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        log_l.push_back(std::log(lx[i]));
        log_u.push_back(std::log(ly[i]));
    }
    fit.points_used = lx.size();
    if (lambda_spans) {
        const LineFit f = least_squares(log_l, log_u);
        fit.kind = FitKind::Regular;
        fit.exponent = f.slope;
        fit.residual = f.rms;
    } else {
        // lambda barely moves: fit lambda against the state and invert
        const LineFit f = least_squares(log_u, log_l);
        fit.kind = FitKind::Inverse;
        fit.exponent = 1.0 / f.slope;
        fit.residual = f.rms;
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Branch switching
// ---------------------------------------------------------------------------

SwitchResult switch_branch(const ReducedProblem& red, const Vector& incoming_tangent, const SwitchOptions& opts) {
    if (incoming_tangent.size() != red.singular_point.u.size() + 1)
        throw Error(ErrorKind::Shape, "switch_branch: tangent must live in (lambda, u) space");
    const double radius = opts.radius.value_or(red.trust_radius);

    SwitchResult out;
    out.half_branches = enumerate_branches(red, radius, opts.grid);
    const auto& hbs = out.half_branches;
    if (hbs.size() < 2)
        throw Error(ErrorKind::Precondition, "switch_branch: fewer than two half-branches at this point");

    Vector incoming(2);
    incoming << incoming_tangent(0),
        (red.kernel_basis.transpose() * incoming_tangent.tail(incoming_tangent.size() - 1))(0);
    if (incoming.norm() == 0.0)
        throw Error(ErrorKind::Precondition, "switch_branch: incoming tangent has no reduced component");
    incoming.normalize();

    std::size_t in = 0;
    for (std::size_t i = 1; i < hbs.size(); ++i)
        if (hbs[i].direction.dot(-incoming) > hbs[in].direction.dot(-incoming)) in = i;

    std::vector<std::size_t> candidates;
    if (hbs.size() == 2) {
        candidates.push_back(1 - in);
    } else {
        for (std::size_t j = 0; j < hbs.size(); ++j)
            if (j != in && hbs[in].direction.dot(hbs[j].direction) < opts.pairing_cosine) candidates.push_back(j);
    }
    if (candidates.size() != 1) {
        std::string list;
        for (std::size_t j = 0; j < hbs.size(); ++j) {
            if (j == in) continue;
            if (!list.empty()) list += ", ";
            list += std::to_string(j) + " (dir " + std::to_string(hbs[j].direction(0)) + ", " +
                    std::to_string(hbs[j].direction(1)) + ")";
        }
        throw Error(ErrorKind::Ambiguous,
                    "switch_branch: pairing is not unique; candidate half-branches: " + list);
    }
    out.incoming = in;
    out.outgoing = candidates.front();
    for (std::size_t j = 0; j < hbs.size(); ++j)
        if (j != in && j != out.outgoing) out.alternatives.push_back(j);

    const HalfBranch& chosen = hbs[out.outgoing];
    out.restart = chosen.points.back();
    const Point& before = chosen.points[chosen.points.size() - 2];
    out.tangent = out.restart.packed() - before.packed();
    out.tangent.normalize();
    return out;
}

} // namespace branchtrace::singular
