// AVX2 variants. Compiled with -mavx2 on x86-64 only; callers must check
// avx2_available() first. Accumulation matches the scalar reference: lanes
// 0..3 live in accA, lanes 4..7 in accB, multiply and add kept as separate
// instructions (no FMA) so results are bit-identical to scalar.

#if defined(__x86_64__) || defined(_M_X64)

#include "cpsw/kernels.hpp"

#include <immintrin.h>

namespace cpsw::kernels::detail {

bool avx2_available() { return __builtin_cpu_supports("avx2"); }

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d accA = _mm256_setzero_pd();
    __m256d accB = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        accA = _mm256_add_pd(
            accA, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
        accB = _mm256_add_pd(
            accB, _mm256_mul_pd(_mm256_loadu_pd(a + i + 4),
                                _mm256_loadu_pd(b + i + 4)));
    }
    double lane[8];
    _mm256_storeu_pd(lane, accA);
    _mm256_storeu_pd(lane + 4, accB);
    for (std::size_t r = 0; i + r < n; ++r) lane[r] += a[i + r] * b[i + r];
    double s = lane[0];
    for (int k = 1; k < 8; ++k) s += lane[k];
    return s;
}

double sqdist_avx2(const double* a, const double* b, std::size_t n) {
    __m256d accA = _mm256_setzero_pd();
    __m256d accB = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d dA =
            _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        const __m256d dB =
            _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
        accA = _mm256_add_pd(accA, _mm256_mul_pd(dA, dA));
        accB = _mm256_add_pd(accB, _mm256_mul_pd(dB, dB));
    }
    double lane[8];
    _mm256_storeu_pd(lane, accA);
    _mm256_storeu_pd(lane + 4, accB);
    for (std::size_t r = 0; i + r < n; ++r) {
        const double d = a[i + r] - b[i + r];
        lane[r] += d * d;
    }
    double s = lane[0];
    for (int k = 1; k < 8; ++k) s += lane[k];
    return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vy = _mm256_add_pd(
            _mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

} // namespace cpsw::kernels::detail

#endif // x86-64
