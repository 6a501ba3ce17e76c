#pragma once

#include "branchtrace/degree.hpp"
#include "branchtrace/problem_model.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace branchtrace::continuation {

enum class Side { Plus, Minus };

enum class EventKind { Fold, Singular, BoundaryApproach, Blowup, BaseReturn, StepFailure };

enum class Classification { Unbounded, Boundary, BaseReturn, WindowExhausted, Stalled };

std::string_view to_string(Side s);
std::string_view to_string(EventKind k);
std::string_view to_string(Classification c);

struct Event {
    EventKind kind = EventKind::StepFailure;
    Point location;
    /// Arclength from the previous accepted point to `location`.
    double offset = 0.0;
    /// FOLD / SINGULAR: orientation before and after the crossing.
    int sign_before = 0;
    int sign_after = 0;
    /// BASE_RETURN: index of the returned zero on the base slice.
    int crossing_index = 0;
    /// Monitor value that triggered the event (margin, norm, gradient ...).
    double value = 0.0;
    std::string note;
    /// Index in Branch::points of the point closing the step that produced
    /// the event (clamped to the last point).
    std::size_t step = 0;
};

struct StepControl {
    double h_init = 0.05;
    double h_min = 1e-6;
    double h_max = 0.2;
    double newton_tol = 1e-10;
    int newton_max_iter = 12;
    double grow = 1.5;
    double shrink = 0.5;
    /// Consecutive accepted steps before the step grows.
    int grow_after = 2;
    int max_steps = 20000;
    double max_arclength = 1e4;
    /// Minimum cosine between consecutive tangents for a step to be accepted.
    double min_tangent_cosine = 0.9;
    double return_separation = 1e-3;
    int bisect_max = 60;
};

struct Branch {
    Side side = Side::Plus;
    std::vector<Point> points;
    std::vector<Vector> tangents;
    std::vector<Event> events;
    Classification classification = Classification::Stalled;
    std::string termination;  // short machine-readable reason
    double arclength = 0.0;
    /// Oriented index of the start point on the base slice.
    int start_index = 0;
};

/// Unit kernel vector of the total Jacobian [D_lambdaF | D_uF] at `point`.
/// Oriented along `previous` when given, otherwise with the sign of its
/// lambda component fixed by `side`.
Vector tangent(const ParameterizedSystem& system, const Point& point,
               const std::optional<Vector>& previous, Side side = Side::Plus);

enum class CorrectStatus { Converged, MaxIterations, Diverged, EvaluationFailure, DomainExit };

struct CorrectResult {
    CorrectStatus status = CorrectStatus::MaxIterations;
    Point point;
    int iterations = 0;
    double residual_norm = 0.0;
    double margin = 0.0;

    bool ok() const { return status == CorrectStatus::Converged; }
};

/// Newton on {F(lambda,u) = 0, <(lambda,u) - predicted, direction> = 0}.
CorrectResult correct(const ParameterizedSystem& system, const Point& predicted, const Vector& direction,
                      const StepControl& ctl);

struct EventOptions {
    /// Start of the branch; enables the BASE_RETURN separation test.
    std::optional<Point> start;
    StepControl ctl;
};

/// Events on the arc between two accepted zeros, each refined by bisection
/// along the corrected curve and sorted by offset.
std::vector<Event> detect_events(const ParameterizedSystem& system, const DomainSpec& domain,
                                 const Point& prev, const Point& next, const EventOptions& opts = {});

/// Pseudo-arclength trace of one unilateral branch from `start`.
Branch trace(const ParameterizedSystem& system, const DomainSpec& domain, const Point& start, Side side,
             const StepControl& ctl);

struct ClassificationReport {
    Classification label = Classification::Stalled;
    std::string alternative;
    double final_lambda = 0.0;
    double final_norm = 0.0;      // Euclidean norm of (lambda, u)
    double final_state_inf = 0.0; // max |u|
    double final_margin = 0.0;
    double min_margin = 0.0;
    double max_norm = 0.0;
    std::vector<degree::SliceCrossing> crossings;
    std::optional<degree::BalanceResult> balance;
};

ClassificationReport classify(const Branch& branch, const DomainSpec& domain);

} // namespace branchtrace::continuation
