// NEON variants for aarch64. Four float64x2_t accumulators hold the eight
// reduction lanes in the same order as the scalar reference.

#if defined(__aarch64__)

#include "cpsw/kernels.hpp"

#include <arm_neon.h>

namespace cpsw::kernels::detail {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0), acc1 = vdupq_n_f64(0.0);
    float64x2_t acc2 = vdupq_n_f64(0.0), acc3 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = vaddq_f64(acc0, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
        acc1 = vaddq_f64(acc1,
                         vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
        acc2 = vaddq_f64(acc2,
                         vmulq_f64(vld1q_f64(a + i + 4), vld1q_f64(b + i + 4)));
        acc3 = vaddq_f64(acc3,
                         vmulq_f64(vld1q_f64(a + i + 6), vld1q_f64(b + i + 6)));
    }
    double lane[8];
    vst1q_f64(lane, acc0);
    vst1q_f64(lane + 2, acc1);
    vst1q_f64(lane + 4, acc2);
    vst1q_f64(lane + 6, acc3);
    for (std::size_t r = 0; i + r < n; ++r) lane[r] += a[i + r] * b[i + r];
    double s = lane[0];
    for (int k = 1; k < 8; ++k) s += lane[k];
    return s;
}

double sqdist_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0), acc1 = vdupq_n_f64(0.0);
    float64x2_t acc2 = vdupq_n_f64(0.0), acc3 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const float64x2_t d0 = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        const float64x2_t d1 =
            vsubq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
        const float64x2_t d2 =
            vsubq_f64(vld1q_f64(a + i + 4), vld1q_f64(b + i + 4));
        const float64x2_t d3 =
            vsubq_f64(vld1q_f64(a + i + 6), vld1q_f64(b + i + 6));
        acc0 = vaddq_f64(acc0, vmulq_f64(d0, d0));
        acc1 = vaddq_f64(acc1, vmulq_f64(d1, d1));
        acc2 = vaddq_f64(acc2, vmulq_f64(d2, d2));
        acc3 = vaddq_f64(acc3, vmulq_f64(d3, d3));
    }
    double lane[8];
    vst1q_f64(lane, acc0);
    vst1q_f64(lane + 2, acc1);
    vst1q_f64(lane + 4, acc2);
    vst1q_f64(lane + 6, acc3);
    for (std::size_t r = 0; i + r < n; ++r) {
        const double d = a[i + r] - b[i + r];
        lane[r] += d * d;
    }
    double s = lane[0];
    for (int k = 1; k < 8; ++k) s += lane[k];
    return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i,
                  vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

} // namespace cpsw::kernels::detail

#endif // aarch64
