#include "branchtrace/degree.hpp"

#include "branchtrace/errors.hpp"
#include "branchtrace/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace branchtrace::degree {

int det_sign(const Matrix& m) {
    if (m.rows() != m.cols()) throw Error(ErrorKind::Shape, "det_sign: matrix is not square");
    if (!m.allFinite()) throw Error(ErrorKind::Evaluation, "det_sign: non-finite entries");
    if (m.rows() == 0) return 1;
    const auto sv = linalg::singular_value_summary(m);
    if (sv.largest == 0.0 || sv.smallest <= linalg::kRegularityTol * sv.largest) return 0;
    return linalg::lu_det_sign(m);
}

int orientation(const ParameterizedSystem& system, const Point& point) {
    return det_sign(system.jac_u(point.lambda, point.u));
}

// ---------------------------------------------------------------------------

MatrixPath::MatrixPath(std::vector<MatrixSample> samples) : samples_(std::move(samples)) {
    if (samples_.size() < 2) throw Error(ErrorKind::Precondition, "MatrixPath: need at least two samples");
    const Index n = samples_.front().value.rows();
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const Matrix& m = samples_[i].value;
        if (m.rows() != n || m.cols() != n)
            throw Error(ErrorKind::Shape, "MatrixPath: samples must be square and equally sized");
        if (i > 0 && !(samples_[i].t > samples_[i - 1].t))
            throw Error(ErrorKind::Precondition, "MatrixPath: sample times must increase strictly");
    }
}

MatrixPath MatrixPath::concatenate(const MatrixPath& next) const {
    if (next.start() != end() || !(next.front() - back()).isZero(0.0))
        throw Error(ErrorKind::Precondition, "MatrixPath::concatenate: endpoints do not match");
    std::vector<MatrixSample> joined = samples_;
    joined.insert(joined.end(), next.samples_.begin() + 1, next.samples_.end());
    return MatrixPath(std::move(joined));
}

int parity(const MatrixPath& path) {
    const int sa = det_sign(path.front());
    const int sb = det_sign(path.back());
    if (sa == 0 || sb == 0)
        throw Error(ErrorKind::Admissibility, "parity: path endpoints must be invertible");
    return sa * sb;
}

int crossing_parity(const MatrixPath& path) {
    int changes = 0;
    int prev = linalg::lu_det_sign(path.front());
    for (std::size_t i = 1; i < path.samples().size(); ++i) {
        const int cur = linalg::lu_det_sign(path.samples()[i].value);
        if (cur != 0 && prev != 0 && cur != prev) ++changes;
        if (cur != 0) prev = cur;
    }
    return changes % 2 == 0 ? 1 : -1;
}

int local_index(const ParameterizedSystem& system, const Point& point, const IndexOptions& opts) {
    const Vector r = checked_residual(system, point);
    if (r.norm() > opts.residual_tol)
        throw Error(ErrorKind::NotAZero, "local_index: residual norm " + std::to_string(r.norm()) +
                                             " exceeds tolerance");
    const int s = orientation(system, point);
    if (s == 0)
        throw Error(ErrorKind::SingularPoint,
                    "local_index: D_uF is singular here; use the singular-point reduction");
    return s;
}

// ---------------------------------------------------------------------------
// Box degree
// ---------------------------------------------------------------------------

namespace {

struct NewtonOutcome {
    bool converged = false;
    Vector x;
};

NewtonOutcome damped_newton(const SliceMap& f, const SliceJacobian& jac, Vector x, const Box& box,
                            const BoxDegreeOptions& opts) {
    const double reach = box.diameter();
    const Vector center = 0.5 * (box.lower + box.upper);
    Vector fx = f(x);
    double norm = fx.norm();
    for (int it = 0; it < opts.newton_max_iter; ++it) {
        if (norm <= opts.newton_tol) return {true, x};
        const Matrix j = jac(x);
        Eigen::PartialPivLU<Matrix> lu(j);
        if (linalg::lu_det_sign(j) == 0) return {false, x};
        const Vector step = lu.solve(fx);
        if (!step.allFinite()) return {false, x};
        double alpha = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
            const Vector trial = x - alpha * step;
            const Vector ft = f(trial);
            if (ft.allFinite() && ft.norm() < norm) {
                x = trial;
                fx = ft;
                norm = ft.norm();
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // stagnation at roundoff level still counts when the step is negligible
            const bool tiny = step.norm() <= 1e-13 * (1.0 + x.norm());
            return {tiny && norm <= 1e3 * opts.newton_tol, x};
        }
        if ((x - center).norm() > 2.0 * reach) return {false, x};
    }
    return {norm <= opts.newton_tol, x};
}

double distance_to_boundary(const Box& box, const Vector& x) {
    return std::min((x - box.lower).minCoeff(), (box.upper - x).minCoeff());
}

void check_boundary(const SliceMap& f, const Box& box, const BoxDegreeOptions& opts) {
    const Index d = box.dim();
    const int k = std::max(2, opts.boundary_samples_per_axis);
    Index face_points = 1;
    for (Index i = 0; i + 1 < d; ++i) face_points *= k;
    Vector x(d);
    for (Index axis = 0; axis < d; ++axis) {
        for (int side = 0; side < 2; ++side) {
            for (Index p = 0; p < face_points; ++p) {
                Index rest = p;
                for (Index i = 0; i < d; ++i) {
                    if (i == axis) {
                        x(i) = side == 0 ? box.lower(i) : box.upper(i);
                        continue;
                    }
                    const Index c = rest % k;
                    rest /= k;
                    x(i) = box.lower(i) + (box.upper(i) - box.lower(i)) * static_cast<double>(c) / (k - 1);
                }
                if (f(x).norm() <= opts.boundary_tol)
                    throw Error(ErrorKind::Admissibility, "box_degree: zero on the box boundary");
            }
        }
    }
}

bool lex_less(const Vector& a, const Vector& b) {
    for (Index i = 0; i < a.size(); ++i) {
        if (a(i) < b(i)) return true;
        if (a(i) > b(i)) return false;
    }
    return false;
}

} // namespace

BoxDegreeResult box_degree(const SliceMap& f, const SliceJacobian& jac, const Box& box,
                           int seeds_per_axis, const BoxDegreeOptions& opts) {
    const Index d = box.dim();
    if (box.upper.size() != d || d == 0) throw Error(ErrorKind::Shape, "box_degree: malformed box");
    if (!(box.upper.array() > box.lower.array()).all())
        throw Error(ErrorKind::Precondition, "box_degree: box must have positive extent");
    if (seeds_per_axis < 1) throw Error(ErrorKind::Precondition, "box_degree: seeds_per_axis must be >= 1");
    const double total_seeds = std::pow(static_cast<double>(seeds_per_axis), static_cast<double>(d));
    if (total_seeds > 1e6) throw Error(ErrorKind::Unsupported, "box_degree: seed grid too large");

    check_boundary(f, box, opts);

    const double diameter = box.diameter();
    const auto n_seeds = static_cast<Index>(total_seeds);
    std::vector<Vector> zeros;
    double jac_scale = 0.0;
    Vector seed(d);
    for (Index s = 0; s < n_seeds; ++s) {
        Index rest = s;
        for (Index i = 0; i < d; ++i) {
            const Index c = rest % seeds_per_axis;
            rest /= seeds_per_axis;
            seed(i) = box.lower(i) + (box.upper(i) - box.lower(i)) * (c + 0.5) / seeds_per_axis;
        }
        jac_scale = std::max(jac_scale, jac(seed).norm());
        const NewtonOutcome out = damped_newton(f, jac, seed, box, opts);
        if (!out.converged) continue;
        const double clearance = distance_to_boundary(box, out.x);
        if (std::abs(clearance) <= opts.boundary_tol * std::max(1.0, diameter))
            throw Error(ErrorKind::Admissibility, "box_degree: zero on the box boundary");
        if (clearance < 0.0) continue;
        const bool seen = std::any_of(zeros.begin(), zeros.end(), [&](const Vector& z) {
            return (z - out.x).norm() <= opts.dedup_rel * diameter;
        });
        if (!seen) zeros.push_back(out.x);
    }
    std::sort(zeros.begin(), zeros.end(), lex_less);

    BoxDegreeResult result;
    for (const Vector& z : zeros) {
        const Matrix jz = jac(z);
        const int s = det_sign(jz);
        // the relative test alone never fires in one dimension
        if (s == 0 || linalg::singular_value_summary(jz).smallest <= opts.degenerate_rel * jac_scale)
            throw Error(ErrorKind::Degeneracy,
                        "box_degree: degenerate zero found; perturb the target value (use f - v for a "
                        "small regular value v)");
        result.indices.push_back(s);
        result.degree += s;
    }
    result.zeros = std::move(zeros);
    return result;
}

int box_degree(const ParameterizedSystem& system, double lambda0, const Box& box, int seeds_per_axis,
               const BoxDegreeOptions& opts) {
    if (box.dim() != system.n_state) throw Error(ErrorKind::Shape, "box_degree: box dimension mismatch");
    const SliceMap f = [&](const Vector& u) { return system.residual(lambda0, u); };
    const SliceJacobian j = [&](const Vector& u) { return system.jac_u(lambda0, u); };
    return box_degree(f, j, box, seeds_per_axis, opts).degree;
}

BalanceResult degree_balance(const std::vector<SliceCrossing>& crossings) {
    BalanceResult r;
    if (crossings.empty()) return r;
    const double l0 = crossings.front().lambda0;
    for (const auto& c : crossings) {
        if (std::abs(c.lambda0 - l0) > 1e-10 * (1.0 + std::abs(l0)))
            throw Error(ErrorKind::Precondition, "degree_balance: crossings lie on different slices");
        r.sum += c.index;
        if (c.index != 0) ++r.nonzero_count;
    }
    r.balanced = r.sum == 0 && r.nonzero_count >= 2 && r.nonzero_count % 2 == 0;
    return r;
}

} // namespace branchtrace::degree
