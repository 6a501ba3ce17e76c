#include "branchtrace/simd/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

#include <cmath>
#include <limits>

namespace branchtrace::simd::detail {

namespace {

void slopes_neon(const double* u, std::size_t n_half, double inv_h, double* p) {
    const float64x2_t vinv = vdupq_n_f64(inv_h);
    std::size_t i = 0;
    for (; i + 2 <= n_half; i += 2)
        vst1q_f64(p + i, vmulq_f64(vsubq_f64(vld1q_f64(u + i + 1), vld1q_f64(u + i)), vinv));
    for (; i < n_half; ++i) p[i] = (u[i + 1] - u[i]) * inv_h;
}

double flux_neon(const double* p, std::size_t n, double lambda, double* f, double* a) {
    const float64x2_t one = vdupq_n_f64(1.0);
    const float64x2_t vl = vdupq_n_f64(lambda);
    float64x2_t vmin = vdupq_n_f64(std::numeric_limits<double>::infinity());
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t vp = vld1q_f64(p + i);
        const float64x2_t s = vsubq_f64(one, vmulq_f64(vl, vmulq_f64(vp, vp)));
        const float64x2_t r = vsqrtq_f64(s);
        vst1q_f64(f + i, vdivq_f64(vp, r));
        vst1q_f64(a + i, vdivq_f64(one, vmulq_f64(s, r)));
        vmin = vminq_f64(vmin, s);
    }
    double smin = vminvq_f64(vmin);
    for (; i < n; ++i) {
        const double s = 1.0 - lambda * (p[i] * p[i]);
        const double r = std::sqrt(s);
        f[i] = p[i] / r;
        a[i] = 1.0 / (s * r);
        smin = s < smin ? s : smin;
    }
    return smin;
}

void divergence_neon(const double* f, std::size_t m, double inv_h, double* out) {
    const float64x2_t vinv = vdupq_n_f64(inv_h);
    std::size_t i = 0;
    for (; i + 2 <= m; i += 2)
        vst1q_f64(out + i, vmulq_f64(vsubq_f64(vld1q_f64(f + i), vld1q_f64(f + i + 1)), vinv));
    for (; i < m; ++i) out[i] = (f[i] - f[i + 1]) * inv_h;
}

double max_square_neon(const double* p, std::size_t n) {
    float64x2_t vmax = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t vp = vld1q_f64(p + i);
        vmax = vmaxq_f64(vmax, vmulq_f64(vp, vp));
    }
    double best = vmaxvq_f64(vmax);
    for (; i < n; ++i) {
        const double sq = p[i] * p[i];
        best = sq > best ? sq : best;
    }
    return best;
}

constexpr FluxKernels kNeon{Backend::Neon, slopes_neon, flux_neon, divergence_neon, max_square_neon};

} // namespace

const FluxKernels* neon_kernels() { return &kNeon; }

} // namespace branchtrace::simd::detail

#else

namespace branchtrace::simd::detail {
const FluxKernels* neon_kernels() { return nullptr; }
} // namespace branchtrace::simd::detail

#endif
