// Compiled with -mavx2; only reached after a runtime CPU check.

#include "branchtrace/simd/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

#include <cmath>
#include <limits>

namespace branchtrace::simd::detail {

namespace {

double hmin(__m256d v) {
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, v);
    double r = lanes[0];
    for (int i = 1; i < 4; ++i) r = lanes[i] < r ? lanes[i] : r;
    return r;
}

double hmax(__m256d v) {
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, v);
    double r = lanes[0];
    for (int i = 1; i < 4; ++i) r = lanes[i] > r ? lanes[i] : r;
    return r;
}

void slopes_avx2(const double* u, std::size_t n_half, double inv_h, double* p) {
    const __m256d vinv = _mm256_set1_pd(inv_h);
    std::size_t i = 0;
    for (; i + 4 <= n_half; i += 4) {
        const __m256d lo = _mm256_loadu_pd(u + i);
        const __m256d hi = _mm256_loadu_pd(u + i + 1);
        _mm256_storeu_pd(p + i, _mm256_mul_pd(_mm256_sub_pd(hi, lo), vinv));
    }
    for (; i < n_half; ++i) p[i] = (u[i + 1] - u[i]) * inv_h;
}

double flux_avx2(const double* p, std::size_t n, double lambda, double* f, double* a) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d vl = _mm256_set1_pd(lambda);
    __m256d vmin = _mm256_set1_pd(std::numeric_limits<double>::infinity());
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vp = _mm256_loadu_pd(p + i);
        const __m256d s = _mm256_sub_pd(one, _mm256_mul_pd(vl, _mm256_mul_pd(vp, vp)));
        const __m256d r = _mm256_sqrt_pd(s);
        _mm256_storeu_pd(f + i, _mm256_div_pd(vp, r));
        _mm256_storeu_pd(a + i, _mm256_div_pd(one, _mm256_mul_pd(s, r)));
        vmin = _mm256_min_pd(vmin, s);
    }
    double smin = hmin(vmin);
    for (; i < n; ++i) {
        const double s = 1.0 - lambda * (p[i] * p[i]);
        const double r = std::sqrt(s);
        f[i] = p[i] / r;
        a[i] = 1.0 / (s * r);
        smin = s < smin ? s : smin;
    }
    return smin;
}

void divergence_avx2(const double* f, std::size_t m, double inv_h, double* out) {
    const __m256d vinv = _mm256_set1_pd(inv_h);
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        const __m256d lo = _mm256_loadu_pd(f + i);
        const __m256d hi = _mm256_loadu_pd(f + i + 1);
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_sub_pd(lo, hi), vinv));
    }
    for (; i < m; ++i) out[i] = (f[i] - f[i + 1]) * inv_h;
}

double max_square_avx2(const double* p, std::size_t n) {
    __m256d vmax = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vp = _mm256_loadu_pd(p + i);
        vmax = _mm256_max_pd(vmax, _mm256_mul_pd(vp, vp));
    }
    double best = hmax(vmax);
    for (; i < n; ++i) {
        const double sq = p[i] * p[i];
        best = sq > best ? sq : best;
    }
    return best;
}

constexpr FluxKernels kAvx2{Backend::Avx2, slopes_avx2, flux_avx2, divergence_avx2, max_square_avx2};

} // namespace

const FluxKernels* avx2_kernels() { return &kAvx2; }

} // namespace branchtrace::simd::detail

#else

namespace branchtrace::simd::detail {
const FluxKernels* avx2_kernels() { return nullptr; }
} // namespace branchtrace::simd::detail

#endif
