#pragma once

#include "branchtrace/errors.hpp"
#include "branchtrace/problem_model.hpp"

#include "doctest.h"

#include <functional>
#include <random>

namespace testutil {

using branchtrace::ErrorKind;

// Runs `fn` and checks it throws branchtrace::Error of the given kind.
inline void require_error(ErrorKind kind, const std::function<void()>& fn) {
    bool thrown = false;
    try {
        fn();
    } catch (const branchtrace::Error& e) {
        thrown = true;
        CHECK_MESSAGE(e.kind() == kind, "wrong error kind: " << branchtrace::to_string(e.kind()) << ": "
                                                             << e.what());
    }
    CHECK_MESSAGE(thrown, "expected an error of kind " << branchtrace::to_string(kind));
}

inline branchtrace::Matrix random_matrix(std::mt19937_64& rng, int n, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    branchtrace::Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = g(rng);
    return m;
}

inline branchtrace::Vector scalar(double v) { return branchtrace::Vector::Constant(1, v); }

} // namespace testutil
