#include "branchtrace/continuation.hpp"

#include "branchtrace/errors.hpp"
#include "branchtrace/linalg.hpp"
#include "branchtrace/singular.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace branchtrace::continuation {

std::string_view to_string(Side s) { return s == Side::Plus ? "plus" : "minus"; }

std::string_view to_string(EventKind k) {
    switch (k) {
    case EventKind::Fold: return "FOLD";
    case EventKind::Singular: return "SINGULAR";
    case EventKind::BoundaryApproach: return "BOUNDARY_APPROACH";
    case EventKind::Blowup: return "BLOWUP";
    case EventKind::BaseReturn: return "BASE_RETURN";
    case EventKind::StepFailure: return "STEP_FAILURE";
    }
    return "UNKNOWN";
}

std::string_view to_string(Classification c) {
    switch (c) {
    case Classification::Unbounded: return "UNBOUNDED";
    case Classification::Boundary: return "BOUNDARY";
    case Classification::BaseReturn: return "BASE_RETURN";
    case Classification::WindowExhausted: return "WINDOW_EXHAUSTED";
    case Classification::Stalled: return "STALLED";
    }
    return "UNKNOWN";
}

namespace {

Matrix total_jacobian(const ParameterizedSystem& system, const Point& p) {
    const Index n = p.u.size();
    Matrix tj(n, n + 1);
    tj.col(0) = system.jac_lambda(p.lambda, p.u);
    tj.rightCols(n) = system.jac_u(p.lambda, p.u);
    return tj;
}

int raw_det_sign(const ParameterizedSystem& system, const Point& p) {
    return linalg::lu_det_sign(system.jac_u(p.lambda, p.u));
}

// smallest of the n singular values of the n x (n+1) total Jacobian
double total_sigma_min(const Matrix& tj) {
    Eigen::JacobiSVD<Matrix> svd(tj);
    const Vector& s = svd.singularValues();
    return s.size() == 0 ? 0.0 : s(s.size() - 1);
}

} // namespace

Vector tangent(const ParameterizedSystem& system, const Point& point, const std::optional<Vector>& previous,
               Side side) {
    const Matrix tj = total_jacobian(system, point);
    if (!tj.allFinite()) throw Error(ErrorKind::Evaluation, "tangent: non-finite Jacobian");
    const Matrix ker = linalg::null_space(tj);
    if (ker.cols() != 1)
        throw Error(ErrorKind::SingularPoint, "tangent: total Jacobian is rank deficient (kernel dimension " +
                                                  std::to_string(ker.cols()) + ")");
    Vector t = ker.col(0).normalized();
    if (previous) {
        if (t.dot(*previous) < 0.0) t = -t;
        return t;
    }
    if (std::abs(t(0)) <= 1e-12)
        throw Error(ErrorKind::Precondition,
                    "tangent: lambda component vanishes, so the side cannot orient the branch");
    const bool want_positive = side == Side::Plus;
    if ((t(0) > 0.0) != want_positive) t = -t;
    return t;
}

CorrectResult correct(const ParameterizedSystem& system, const Point& predicted, const Vector& direction,
                      const StepControl& ctl) {
    const Vector x_pred = predicted.packed();
    const Index n = predicted.u.size();
    Vector x = x_pred;
    CorrectResult out;
    out.point = predicted;
    const double blowup_step = 1e3 * (1.0 + x_pred.norm());
    try {
        for (int it = 0;; ++it) {
            const Point p = Point::unpack(x);
            const Vector r = system.residual(p.lambda, p.u);
            if (!r.allFinite()) {
                out.status = CorrectStatus::EvaluationFailure;
                return out;
            }
            const double g = (x - x_pred).dot(direction);
            out.residual_norm = r.norm();
            out.iterations = it;
            out.point = p;
            if (out.residual_norm <= ctl.newton_tol && std::abs(g) <= 1e-10 * (1.0 + x.norm())) break;
            if (it >= ctl.newton_max_iter) {
                out.status = CorrectStatus::MaxIterations;
                return out;
            }
            Matrix bordered(n + 1, n + 1);
            bordered.topRows(n) = total_jacobian(system, p);
            bordered.row(n) = direction.transpose();
            Vector rhs(n + 1);
            rhs.head(n) = r;
            rhs(n) = g;
            const Vector dx = bordered.partialPivLu().solve(rhs);
            if (!dx.allFinite() || dx.norm() > blowup_step) {
                out.status = CorrectStatus::Diverged;
                return out;
            }
            x -= dx;
        }
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Domain && e.kind() != ErrorKind::Evaluation) throw;
        out.status = CorrectStatus::EvaluationFailure;
        return out;
    }
    const MembershipResult m = inside_domain(system.domain, out.point);
    out.margin = m.margin;
    out.status = m.inside ? CorrectStatus::Converged : CorrectStatus::DomainExit;
    return out;
}

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

namespace {

/// The corrected curve between two accepted zeros, parameterized by the
/// distance s along their secant.
class Arc {
public:
    Arc(const ParameterizedSystem& system, const Point& prev, const Point& next, const StepControl& ctl)
        : system_(system), prev_(prev), next_(next), ctl_(ctl) {
        const Vector d = next.packed() - prev.packed();
        length_ = d.norm();
        dir_ = length_ > 0.0 ? Vector(d / length_) : Vector(Vector::Zero(d.size()));
    }

    double length() const { return length_; }

    std::optional<Point> at(double s) const {
        if (s <= 0.0) return prev_;
        if (s >= length_) return next_;
        const CorrectResult r = correct(system_, Point::unpack(prev_.packed() + s * dir_), dir_, ctl_);
        if (r.status == CorrectStatus::Converged || r.status == CorrectStatus::DomainExit) return r.point;
        return std::nullopt;
    }

    struct Refined {
        double s = 0.0;
        Point point;
    };

    /// Bisection for the first s where `flag` turns true; flag(prev) is
    /// false and flag(next) true. Returns the point on the true side.
    Refined refine(const std::function<bool(const Point&)>& flag) const {
        double lo = 0.0, hi = length_;
        Point hi_point = next_;
        for (int it = 0; it < ctl_.bisect_max && hi - lo > 1e-15 * (1.0 + length_); ++it) {
            const double mid = 0.5 * (lo + hi);
            const auto p = at(mid);
            if (!p) break;
            if (flag(*p)) {
                hi = mid;
                hi_point = *p;
            } else {
                lo = mid;
            }
        }
        return {hi, hi_point};
    }

private:
    const ParameterizedSystem& system_;
    Point prev_, next_;
    StepControl ctl_;
    double length_ = 0.0;
    Vector dir_;
};

/// Newton at fixed lambda = target, started from `approx`.
std::optional<Point> pin_lambda(const ParameterizedSystem& system, const Point& approx, double target,
                                const StepControl& ctl) {
    Vector e = Vector::Zero(approx.u.size() + 1);
    e(0) = 1.0;
    const CorrectResult r = correct(system, Point{target, approx.u}, e, ctl);
    if (!r.ok() && r.status != CorrectStatus::DomainExit) return std::nullopt;
    if ((r.point.u - approx.u).norm() > 1e-6 * (1.0 + approx.u.norm())) return std::nullopt;
    return r.point;
}

bool above_cap(const DomainSpec& domain, const Point& p, double* value) {
    const double norm = p.packed().norm();
    if (norm > domain.norm_cap) {
        if (value) *value = norm;
        return true;
    }
    if (domain.blowup && domain.blowup->value) {
        const double v = domain.blowup->value(p);
        if (v > domain.blowup->threshold) {
            if (value) *value = v;
            return true;
        }
    }
    return false;
}

double margin_of(const DomainSpec& domain, const Point& p) { return inside_domain(domain, p).margin; }

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

} // namespace

std::vector<Event> detect_events(const ParameterizedSystem& system_in, const DomainSpec& domain, const Point& prev,
                                 const Point& next, const EventOptions& opts) {
    ParameterizedSystem system = system_in;
    system.domain = domain;
    const StepControl& ctl = opts.ctl;
    const Arc arc(system, prev, next, ctl);
    std::vector<Event> events;

    // determinant sign change: fold or singular point
    const int sp = raw_det_sign(system, prev);
    const int sn = raw_det_sign(system, next);
    if (sp != 0 && sn != 0 && sp != sn) {
        const auto r = arc.refine([&](const Point& p) { return raw_det_sign(system, p) != sp; });
        Event e;
        e.location = r.point;
        e.offset = r.s;
        e.sign_before = sp;
        e.sign_after = sn;
        const double scale =
            std::max(total_jacobian(system, prev).norm(), total_jacobian(system, next).norm());
        const double smin = total_sigma_min(total_jacobian(system, r.point));
        e.value = smin;
        e.kind = smin <= 1e-6 * scale ? EventKind::Singular : EventKind::Fold;
        events.push_back(e);
    }

    // return to the base slice
    const double l0 = domain.base_lambda;
    const int side_prev = sign_of(prev.lambda - l0);
    const int side_next = sign_of(next.lambda - l0);
    if (side_prev != 0 && side_next != side_prev) {
        const auto r = arc.refine([&](const Point& p) { return sign_of(p.lambda - l0) != side_prev; });
        Point loc = r.point;
        if (const auto pinned = pin_lambda(system, loc, l0, ctl)) loc = *pinned;
        const bool separated = !opts.start || (loc.u - opts.start->u).norm() > ctl.return_separation;
        if (separated && std::abs(loc.lambda - l0) <= 1e-10) {
            Event e;
            e.kind = EventKind::BaseReturn;
            e.location = loc;
            e.offset = r.s;
            e.crossing_index = degree::det_sign(system.jac_u(loc.lambda, loc.u));
            e.value = opts.start ? (loc.u - opts.start->u).norm() : 0.0;
            events.push_back(e);
        }
    }

    // boundary approach
    const double thr = domain.boundary_threshold;
    if (margin_of(domain, next) < thr) {
        Event e;
        e.kind = EventKind::BoundaryApproach;
        if (margin_of(domain, prev) >= thr) {
            const auto r = arc.refine([&](const Point& p) { return margin_of(domain, p) < thr; });
            e.location = r.point;
            e.offset = r.s;
        } else {
            e.location = next;
            e.offset = arc.length();
        }
        e.value = margin_of(domain, e.location);
        events.push_back(e);
    }

    // blow-up: norm cap or monitor threshold
    if (above_cap(domain, next, nullptr)) {
        Event e;
        e.kind = EventKind::Blowup;
        if (!above_cap(domain, prev, nullptr)) {
            const auto r = arc.refine([&](const Point& p) { return above_cap(domain, p, nullptr); });
            e.location = r.point;
            e.offset = r.s;
        } else {
            e.location = next;
            e.offset = arc.length();
        }
        above_cap(domain, e.location, &e.value);
        const bool by_norm = e.location.packed().norm() > domain.norm_cap;
        e.note = by_norm ? "norm_cap" : (domain.blowup ? domain.blowup->name : "monitor");
        events.push_back(e);
    }

    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.offset < b.offset; });
    return events;
}

// ---------------------------------------------------------------------------
// Trace
// ---------------------------------------------------------------------------

namespace {

bool is_terminal(EventKind k) {
    return k == EventKind::BoundaryApproach || k == EventKind::Blowup || k == EventKind::BaseReturn;
}

Classification label_for(EventKind k) {
    switch (k) {
    case EventKind::BoundaryApproach: return Classification::Boundary;
    case EventKind::Blowup: return Classification::Unbounded;
    case EventKind::BaseReturn: return Classification::BaseReturn;
    default: return Classification::Stalled;
    }
}

std::string termination_for(EventKind k) {
    switch (k) {
    case EventKind::BoundaryApproach: return "boundary_approach";
    case EventKind::Blowup: return "blowup";
    case EventKind::BaseReturn: return "base_return";
    default: return "event";
    }
}

Branch& clamp_steps(Branch& b) {
    for (Event& e : b.events) e.step = std::min(e.step, b.points.empty() ? 0 : b.points.size() - 1);
    return b;
}

/// Lands a corrected point with margin in (0, threshold) on the ray
/// x + s t, s in (0, h], when the full step left the admissible band.
std::optional<CorrectResult> land_near_boundary(const ParameterizedSystem& system, const Point& x, const Vector& t,
                                                double h, const StepControl& ctl) {
    const double thr = system.domain.boundary_threshold;
    const Vector base = x.packed();
    double lo = 0.0, hi = h;
    for (int it = 0; it < ctl.bisect_max; ++it) {
        const double mid = 0.5 * (lo + hi);
        const CorrectResult r = correct(system, Point::unpack(base + mid * t), t, ctl);
        if (r.ok() && r.margin < thr) return r;
        if (r.ok()) lo = mid;
        else hi = mid;
    }
    return std::nullopt;
}

} // namespace

Branch trace(const ParameterizedSystem& system_in, const DomainSpec& domain, const Point& start, Side side,
             const StepControl& ctl) {
    ParameterizedSystem system = system_in;
    system.domain = domain;

    if (start.u.size() != system.n_state) throw Error(ErrorKind::Shape, "trace: start has the wrong length");
    if (std::abs(start.lambda - domain.base_lambda) > 1e-12)
        throw Error(ErrorKind::Precondition, "trace: start must lie on the base slice lambda = base_lambda");
    const Vector r0 = checked_residual(system, start);
    if (r0.norm() > std::max(ctl.newton_tol, 1e-8))
        throw Error(ErrorKind::Precondition,
                    "trace: start is not a zero (residual " + std::to_string(r0.norm()) + ")");
    const MembershipResult m0 = inside_domain(domain, start);
    if (!m0.inside) throw Error(ErrorKind::Precondition, "trace: start lies outside the domain");
    const int start_sign = degree::det_sign(system.jac_u(start.lambda, start.u));
    if (start_sign == 0)
        throw Error(ErrorKind::SingularPoint, "trace: D_uF is singular at the start; use the singular module");

    Branch b;
    b.side = side;
    b.start_index = start_sign;
    Vector t = tangent(system, start, std::nullopt, side);
    b.points.push_back(start);
    b.tangents.push_back(t);

    if (m0.margin < domain.boundary_threshold) {
        b.events.push_back(Event{EventKind::BoundaryApproach, start, 0.0, 0, 0, 0, m0.margin, "start", 0});
        b.classification = Classification::Boundary;
        b.termination = "boundary_approach";
        return clamp_steps(b);
    }

    EventOptions eopts;
    eopts.start = start;
    eopts.ctl = ctl;

    Point x = start;
    double h = std::clamp(ctl.h_init, ctl.h_min, ctl.h_max);
    int successes = 0;
    int switches = 0;

    auto record = [&](Event e) {
        e.step = b.points.size();
        b.events.push_back(std::move(e));
    };
    auto finish = [&](Classification c, std::string why) {
        b.classification = c;
        b.termination = std::move(why);
    };
    auto push_point = [&](const Point& p, const Vector& tp) {
        const double d = (p.packed() - b.points.back().packed()).norm();
        if (d < 0.05 * ctl.h_min) {
            if (b.points.size() > 1) {
                b.points.back() = p;
                b.tangents.back() = tp;
            }
        } else {
            b.points.push_back(p);
            b.tangents.push_back(tp);
            b.arclength += d;
        }
    };

    for (int step = 0;; ++step) {
        if (step >= ctl.max_steps) {
            finish(Classification::WindowExhausted, "budget");
            return clamp_steps(b);
        }
        if (b.arclength >= ctl.max_arclength) {
            finish(Classification::WindowExhausted, "arclength");
            return clamp_steps(b);
        }
        if (h < ctl.h_min) {
            Event e;
            e.kind = EventKind::StepFailure;
            e.location = x;
            e.value = h;
            e.note = "step size below h_min";
            record(e);
            finish(Classification::Stalled, "step_size");
            return clamp_steps(b);
        }

        const Point pred = Point::unpack(x.packed() + h * t);
        CorrectResult res = correct(system, pred, t, ctl);
        if (res.status == CorrectStatus::DomainExit || (res.ok() && res.margin < domain.boundary_threshold)) {
            if (!(res.ok() && res.margin > 0.0)) {
                if (auto landed = land_near_boundary(system, x, t, h, ctl)) res = *landed;
            }
        }
        if (!res.ok()) {
            h *= ctl.shrink;
            successes = 0;
            continue;
        }
        const Point y = res.point;
        if ((y.packed() - pred.packed()).norm() > h) {
            h *= ctl.shrink;
            successes = 0;
            continue;
        }
        Vector ty;
        try {
            ty = tangent(system, y, t);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::SingularPoint) throw;
            h *= 0.7;
            successes = 0;
            continue;
        }
        if (ty.dot(t) < ctl.min_tangent_cosine) {
            h *= ctl.shrink;
            successes = 0;
            continue;
        }

        std::vector<Event> events = detect_events(system, domain, x, y, eopts);

        // leaving the lambda window counts as a pseudo-event
        std::optional<Point> window_point;
        double window_offset = std::numeric_limits<double>::infinity();
        if (y.lambda < domain.lambda_min || y.lambda > domain.lambda_max) {
            const double edge = y.lambda < domain.lambda_min ? domain.lambda_min : domain.lambda_max;
            const Arc arc(system, x, y, ctl);
            const auto r = arc.refine([&](const Point& p) {
                return p.lambda < domain.lambda_min || p.lambda > domain.lambda_max;
            });
            window_point = pin_lambda(system, r.point, edge, ctl).value_or(r.point);
            window_offset = r.s;
        }

        bool stop = false;
        bool switched = false;
        for (const Event& e : events) {
            if (e.offset > window_offset) break;
            if (is_terminal(e.kind)) {
                record(e);
                push_point(e.location, tangent(system, e.location, t));
                finish(label_for(e.kind), termination_for(e.kind));
                stop = true;
                break;
            }
            if (e.kind == EventKind::Singular) {
                const Point& loc = e.location;
                const Matrix tj = total_jacobian(system, loc);
                const double scale =
                    std::max(total_jacobian(system, x).norm(), total_jacobian(system, y).norm());
                if (total_sigma_min(tj) > 1e-6 * scale) {
                    record(e);
                    continue;
                }
                Event se = e;
                try {
                    if (++switches > 16)
                        throw Error(ErrorKind::Precondition, "too many branch switches on one trace");
                    singular::ReductionOptions ro;
                    const Matrix j = system.jac_u(loc.lambda, loc.u);
                    Eigen::JacobiSVD<Matrix> svd(j);
                    const double smax = svd.singularValues()(0);
                    ro.rank_tol = smax > 0.0 ? std::clamp(1e-6 * scale / smax, linalg::kRegularityTol, 1.0)
                                             : linalg::kRegularityTol;
                    const singular::ReducedProblem red = singular::ls_reduce(system, loc, ro);
                    const singular::SwitchResult sw = singular::switch_branch(red, t);
                    const CorrectResult polished = correct(system, sw.restart, sw.tangent, ctl);
                    if (!polished.ok())
                        throw Error(ErrorKind::Refine, "restart point after the branch switch does not converge");
                    se.note = "branch switch: half-branch " + std::to_string(sw.incoming) + " -> " +
                              std::to_string(sw.outgoing);
                    record(se);
                    push_point(loc, t);
                    Vector tr = tangent(system, polished.point, sw.tangent);
                    push_point(polished.point, tr);
                    x = polished.point;
                    t = tr;
                    switched = true;
                } catch (const Error& err) {
                    se.note = std::string("branch switch failed: ") + err.what();
                    record(se);
                    Event f;
                    f.kind = EventKind::StepFailure;
                    f.location = loc;
                    f.note = se.note;
                    record(f);
                    push_point(loc, t);
                    finish(Classification::Stalled, "switch_failed");
                    stop = true;
                }
                break;
            }
            record(e);
        }
        if (stop) return clamp_steps(b);
        if (switched) {
            successes = 0;
            continue;
        }
        if (window_point) {
            push_point(*window_point, tangent(system, *window_point, t));
            finish(Classification::WindowExhausted, "window");
            return clamp_steps(b);
        }

        push_point(y, ty);
        x = y;
        t = ty;
        if (++successes >= ctl.grow_after) {
            h = std::min(h * ctl.grow, ctl.h_max);
            successes = 0;
        }
    }
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

ClassificationReport classify(const Branch& branch, const DomainSpec& domain) {
    ClassificationReport rep;
    rep.label = branch.classification;
    switch (rep.label) {
    case Classification::Unbounded:
        rep.alternative = "(i)/(a): branch leaves every bounded set (norm cap or blow-up monitor exceeded)";
        break;
    case Classification::Boundary:
        rep.alternative = "(ii)/(b): branch reaches the boundary of the admissible set";
        break;
    case Classification::BaseReturn:
        rep.alternative = "(iii)/(c): branch returns to the base slice at a second zero";
        break;
    case Classification::WindowExhausted:
        rep.alternative = "alternative undetermined within window";
        break;
    case Classification::Stalled:
        rep.alternative = "inconclusive: continuation stalled";
        break;
    }
    if (branch.points.empty()) return rep;

    const Point& last = branch.points.back();
    rep.final_lambda = last.lambda;
    rep.final_norm = last.packed().norm();
    rep.final_state_inf = last.u.size() ? last.u.cwiseAbs().maxCoeff() : 0.0;
    rep.final_margin = inside_domain(domain, last).margin;
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (const Point& p : branch.points) {
        rep.min_margin = std::min(rep.min_margin, inside_domain(domain, p).margin);
        rep.max_norm = std::max(rep.max_norm, p.packed().norm());
    }

    const Point& start = branch.points.front();
    rep.crossings.push_back({start.u, branch.start_index, domain.base_lambda});
    bool returned = false;
    for (const Event& e : branch.events) {
        if (e.kind != EventKind::BaseReturn) continue;
        rep.crossings.push_back({e.location.u, e.crossing_index, domain.base_lambda});
        returned = true;
    }
    if (returned) rep.balance = degree::degree_balance(rep.crossings);
    return rep;
}

} // namespace branchtrace::continuation
