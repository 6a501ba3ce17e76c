#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>

namespace branchtrace {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// A pair (lambda, u): continuation parameter and discretized state.
struct Point {
    double lambda = 0.0;
    Vector u;

    Index size() const { return u.size(); }

    /// Packs the point as (lambda, u_1, ..., u_n).
    Vector packed() const;
    static Point unpack(const Vector& x);
};

/// Scalar monitor evaluated at accepted points; crossing `threshold` from
/// below counts as blow-up even while the (lambda, u) norm stays under the cap.
struct BlowupMonitor {
    std::string name;
    std::function<double(const Point&)> value;
    double threshold = 0.0;
};

struct DomainSpec {
    /// Strictly positive inside the open admissible set.
    std::function<double(double, const Vector&)> margin;
    double norm_cap = 1e6;
    double base_lambda = 0.0;
    double lambda_min = -1e6;
    double lambda_max = 1e6;
    /// Margins below this value trigger the boundary-approach event.
    double boundary_threshold = 1e-3;
    std::optional<BlowupMonitor> blowup;
};

struct ParameterizedSystem {
    std::string name;
    Index n_state = 0;
    std::function<Vector(double, const Vector&)> residual;
    std::function<Matrix(double, const Vector&)> jac_u;
    std::function<Vector(double, const Vector&)> jac_lambda;
    DomainSpec domain;
};

/// Orientation convention used throughout: sign of det D_uF at regular points.
struct Orientation {
    static constexpr const char* convention = "sign-of-determinant";
};

struct MembershipResult {
    bool inside = false;
    double margin = 0.0;
};

MembershipResult inside_domain(const DomainSpec& domain, const Point& point);

/// Residual evaluation that rejects non-finite output and wrong sizes.
Vector checked_residual(const ParameterizedSystem& system, const Point& point);

struct ConsistencyReport {
    double jac_u_error = 0.0;
    double jac_lambda_error = 0.0;
    double tolerance = 1e-5;
    bool passed() const { return jac_u_error <= tolerance && jac_lambda_error <= tolerance; }
};

/// Compares analytic derivatives with central finite differences at `point`.
/// Errors are max-entry discrepancies relative to the largest entry of the
/// finite-difference reference.
ConsistencyReport validate_consistency(const ParameterizedSystem& system, const Point& point,
                                       double h_fd);

} // namespace branchtrace
