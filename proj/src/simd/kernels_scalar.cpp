#include "branchtrace/simd/kernels.hpp"

#include <cmath>
#include <limits>

namespace branchtrace::simd::detail {

namespace {

void slopes_scalar(const double* u, std::size_t n_half, double inv_h, double* p) {
    for (std::size_t i = 0; i < n_half; ++i) p[i] = (u[i + 1] - u[i]) * inv_h;
}

double flux_scalar(const double* p, std::size_t n, double lambda, double* f, double* a) {
    double smin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double s = 1.0 - lambda * (p[i] * p[i]);
        const double r = std::sqrt(s);
        f[i] = p[i] / r;
        a[i] = 1.0 / (s * r);
        smin = s < smin ? s : smin;
    }
    return smin;
}

void divergence_scalar(const double* f, std::size_t m, double inv_h, double* out) {
    for (std::size_t i = 0; i < m; ++i) out[i] = (f[i] - f[i + 1]) * inv_h;
}

double max_square_scalar(const double* p, std::size_t n) {
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sq = p[i] * p[i];
        best = sq > best ? sq : best;
    }
    return best;
}

constexpr FluxKernels kScalar{Backend::Scalar, slopes_scalar, flux_scalar, divergence_scalar,
                              max_square_scalar};

} // namespace

const FluxKernels& scalar_kernels() { return kScalar; }

} // namespace branchtrace::simd::detail
