#pragma once

// Inner loops of the mean-curvature discretization. Every backend computes
// the same sequence of IEEE operations (no contraction), so results are
// bitwise identical across backends; the equivalence tests assert that.

#include <cstddef>
#include <string_view>
#include <vector>

namespace branchtrace::simd {

enum class Backend { Scalar, Avx2, Neon };

std::string_view to_string(Backend b);

struct FluxKernels {
    Backend backend;

    /// p[i] = (u[i+1] - u[i]) * inv_h, i < n_half, over a zero-padded state
    /// of length n_half + 1.
    void (*slopes)(const double* padded_u, std::size_t n_half, double inv_h, double* p);

    /// s = 1 - lambda p^2, f = p / sqrt(s), a = 1 / (s sqrt(s)).
    /// Returns min s; callers must reject the output when it is <= 0.
    double (*flux)(const double* p, std::size_t n, double lambda, double* f, double* a);

    /// out[i] = (f[i] - f[i+1]) * inv_h, i < m.
    void (*divergence)(const double* f, std::size_t m, double inv_h, double* out);

    /// max p[i]^2.
    double (*max_square)(const double* p, std::size_t n);
};

bool available(Backend b);

/// Kernel table for a backend. Throws if it is not available on this CPU.
const FluxKernels& kernels(Backend b);

/// Best available backend, chosen once at first use. The environment
/// variable BRANCHTRACE_SIMD=scalar forces the scalar path.
const FluxKernels& active();

std::vector<Backend> available_backends();

namespace detail {
const FluxKernels& scalar_kernels();
const FluxKernels* avx2_kernels();  // nullptr when not compiled in
const FluxKernels* neon_kernels();
} // namespace detail

} // namespace branchtrace::simd
