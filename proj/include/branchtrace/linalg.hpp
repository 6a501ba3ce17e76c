#pragma once

#include "branchtrace/problem_model.hpp"

namespace branchtrace::linalg {

/// Relative threshold on sigma_min / sigma_max below which a matrix counts as singular.
inline constexpr double kRegularityTol = 1e-8;

struct SingularValueSummary {
    double largest = 0.0;
    double smallest = 0.0;
    double ratio() const { return largest > 0.0 ? smallest / largest : 0.0; }
};

SingularValueSummary singular_value_summary(const Matrix& m);

/// Sign of det(m) from the pivots of a partially pivoted LU factorization,
/// without any regularity threshold. Returns 0 only for an exactly zero pivot.
int lu_det_sign(const Matrix& m);

/// Orthonormal basis of the null space of a wide n x (n+1) matrix, computed
/// from a column-pivoted QR of its transpose. Columns beyond the numerical
/// rank (relative tolerance `rank_tol`) form the basis.
Matrix null_space(const Matrix& wide, double rank_tol = kRegularityTol);

double inf_norm(const Vector& v);

} // namespace branchtrace::linalg
