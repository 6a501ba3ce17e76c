#pragma once

#include "branchtrace/oracles.hpp"
#include "branchtrace/problem_model.hpp"

#include <vector>

namespace branchtrace::degree {

using oracles::Box;

/// Sign of det(m), or 0 when sigma_min <= 1e-8 * sigma_max.
int det_sign(const Matrix& m);

/// Orientation of (lambda, u): det_sign of D_uF there.
int orientation(const ParameterizedSystem& system, const Point& point);

struct MatrixSample {
    double t = 0.0;
    Matrix value;
};

/// Sampled continuous family t -> L(t) on [a, b]; t strictly increasing.
class MatrixPath {
public:
    explicit MatrixPath(std::vector<MatrixSample> samples);

    const std::vector<MatrixSample>& samples() const { return samples_; }
    double start() const { return samples_.front().t; }
    double end() const { return samples_.back().t; }
    const Matrix& front() const { return samples_.front().value; }
    const Matrix& back() const { return samples_.back().value; }

    /// Joins this path on [a, b] with `next` on [b, c]; the shared endpoint
    /// must coincide.
    MatrixPath concatenate(const MatrixPath& next) const;

private:
    std::vector<MatrixSample> samples_;
};

/// Parity of an admissible path: det_sign(L(a)) * det_sign(L(b)).
int parity(const MatrixPath& path);

/// Parity counted from the sampled interior: (-1)^(number of determinant
/// sign changes between consecutive samples). Agrees with `parity` once
/// the sampling resolves every crossing.
int crossing_parity(const MatrixPath& path);

struct IndexOptions {
    double residual_tol = 1e-8;
};

/// Oriented index of a regular zero.
int local_index(const ParameterizedSystem& system, const Point& point, const IndexOptions& opts = {});

struct BoxDegreeOptions {
    double boundary_tol = 1e-8;
    double dedup_rel = 1e-6;
    int newton_max_iter = 60;
    double newton_tol = 1e-12;
    int boundary_samples_per_axis = 41;
    /// A zero is degenerate when sigma_min(J) <= degenerate_rel times the
    /// largest Jacobian norm seen at the seeds.
    double degenerate_rel = 1e-5;
};

struct BoxDegreeResult {
    int degree = 0;
    std::vector<Vector> zeros;  // sorted lexicographically
    std::vector<int> indices;
};

using SliceMap = oracles::SliceMap;
using SliceJacobian = std::function<Matrix(const Vector&)>;

/// Degree of a map on an open box by multistart damped Newton: seeds on a
/// cell-centered grid, zeros deduplicated, indices summed.
BoxDegreeResult box_degree(const SliceMap& f, const SliceJacobian& jac, const Box& box,
                           int seeds_per_axis, const BoxDegreeOptions& opts = {});

/// Degree of the frozen slice u -> F(lambda0, u) on `box`.
int box_degree(const ParameterizedSystem& system, double lambda0, const Box& box, int seeds_per_axis,
               const BoxDegreeOptions& opts = {});

struct SliceCrossing {
    Vector u;
    int index = 0;
    double lambda0 = 0.0;
};

struct BalanceResult {
    int sum = 0;
    int nonzero_count = 0;
    bool balanced = false;
};

/// Sum of crossing indices on one base slice. Balanced means sum 0 with an
/// even number (at least two) of nonzero-index crossings.
BalanceResult degree_balance(const std::vector<SliceCrossing>& crossings);

} // namespace branchtrace::degree
