#include "branchtrace/problem_model.hpp"

#include "branchtrace/errors.hpp"
#include "branchtrace/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace branchtrace {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Evaluation: return "evaluation";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Admissibility: return "admissibility";
    case ErrorKind::Degeneracy: return "degeneracy";
    case ErrorKind::SingularPoint: return "singular_point";
    case ErrorKind::NotAZero: return "not_a_zero";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Reduction: return "reduction";
    case ErrorKind::TrustRegion: return "trust_region";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Ambiguous: return "ambiguous";
    case ErrorKind::Bracket: return "bracket";
    case ErrorKind::Refine: return "refine";
    case ErrorKind::Initialization: return "initialization";
    case ErrorKind::Config: return "config";
    }
    return "unknown";
}

Vector Point::packed() const {
    Vector x(u.size() + 1);
    x(0) = lambda;
    x.tail(u.size()) = u;
    return x;
}

Point Point::unpack(const Vector& x) {
    return Point{x(0), x.tail(x.size() - 1)};
}

MembershipResult inside_domain(const DomainSpec& domain, const Point& point) {
    if (!domain.margin) return {true, std::numeric_limits<double>::infinity()};
    const double m = domain.margin(point.lambda, point.u);
    return {m > 0.0, m};
}

Vector checked_residual(const ParameterizedSystem& system, const Point& point) {
    Vector r = system.residual(point.lambda, point.u);
    if (r.size() != system.n_state)
        throw Error(ErrorKind::Shape, "residual returned a vector of the wrong length");
    if (!r.allFinite()) throw Error(ErrorKind::Evaluation, "residual is not finite");
    return r;
}

namespace {

double relative_discrepancy(const Matrix& analytic, const Matrix& reference) {
    const double scale = reference.cwiseAbs().maxCoeff();
    const double diff = (analytic - reference).cwiseAbs().maxCoeff();
    if (scale == 0.0) return diff;
    return diff / scale;
}

} // namespace

ConsistencyReport validate_consistency(const ParameterizedSystem& system, const Point& point,
                                       double h_fd) {
    if (!(h_fd > 0.0)) throw Error(ErrorKind::Precondition, "validate_consistency: h_fd must be positive");
    if (point.u.size() != system.n_state)
        throw Error(ErrorKind::Shape, "validate_consistency: state has the wrong length");
    if (!inside_domain(system.domain, point).inside)
        throw Error(ErrorKind::Domain, "validate_consistency: point outside the domain");
    checked_residual(system, point);

    ConsistencyReport report;
    const Matrix ju = system.jac_u(point.lambda, point.u);
    const Vector jl = system.jac_lambda(point.lambda, point.u);
    if (!ju.allFinite() || !jl.allFinite())
        throw Error(ErrorKind::Evaluation, "validate_consistency: non-finite analytic derivative");
    report.jac_u_error = relative_discrepancy(ju, oracles::fd_jacobian(system, point, h_fd));
    report.jac_lambda_error =
        relative_discrepancy(jl, oracles::fd_lambda_derivative(system, point, h_fd));
    return report;
}

} // namespace branchtrace
