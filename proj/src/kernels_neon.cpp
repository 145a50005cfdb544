// NEON lane for arm64, where 128-bit SIMD is baseline. Mirrors the AVX2
// lane's blocked accumulation with 2-wide double vectors.

#include "kernels_lanes.hpp"

#if defined(ICKD_HAVE_NEON)

#include <arm_neon.h>

#include <limits>

namespace ickd::kernels {

namespace {

constexpr std::size_t kLanes = 2;
constexpr std::size_t kBlock = 4 * kLanes;

double neon_dot(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    float64x2_t acc2 = vdupq_n_f64(0.0);
    float64x2_t acc3 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + kBlock <= n; i += kBlock) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
        acc2 = vfmaq_f64(acc2, vld1q_f64(a + i + 4), vld1q_f64(b + i + 4));
        acc3 = vfmaq_f64(acc3, vld1q_f64(a + i + 6), vld1q_f64(b + i + 6));
    }
    acc0 = vaddq_f64(vaddq_f64(acc0, acc1), vaddq_f64(acc2, acc3));
    for (; i + kLanes <= n; i += kLanes)
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    double acc = vaddvq_f64(acc0);
    for (; i < n; ++i)
        acc += a[i] * b[i];
    return acc;
}

double neon_sum(const double* a, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    float64x2_t acc2 = vdupq_n_f64(0.0);
    float64x2_t acc3 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + kBlock <= n; i += kBlock) {
        acc0 = vaddq_f64(acc0, vld1q_f64(a + i));
        acc1 = vaddq_f64(acc1, vld1q_f64(a + i + 2));
        acc2 = vaddq_f64(acc2, vld1q_f64(a + i + 4));
        acc3 = vaddq_f64(acc3, vld1q_f64(a + i + 6));
    }
    acc0 = vaddq_f64(vaddq_f64(acc0, acc1), vaddq_f64(acc2, acc3));
    for (; i + kLanes <= n; i += kLanes)
        acc0 = vaddq_f64(acc0, vld1q_f64(a + i));
    double acc = vaddvq_f64(acc0);
    for (; i < n; ++i)
        acc += a[i];
    return acc;
}

double neon_max(const double* a, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    if (n >= kLanes) {
        float64x2_t acc = vld1q_f64(a);
        for (i = kLanes; i + kLanes <= n; i += kLanes)
            acc = vmaxq_f64(acc, vld1q_f64(a + i));
        m = vmaxvq_f64(acc);
    }
    for (; i < n; ++i)
        if (a[i] > m)
            m = a[i];
    return m;
}

void neon_axpy(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        float64x2_t vy = vld1q_f64(y + i);
        vy = vfmaq_f64(vy, va, vld1q_f64(x + i));
        vst1q_f64(y + i, vy);
    }
    for (; i < n; ++i)
        y[i] += alpha * x[i];
}

constexpr Ops kNeon{"neon", neon_dot, neon_sum, neon_max, neon_axpy};

} // namespace

const Ops* neon_ops() { return &kNeon; }

} // namespace ickd::kernels

#endif // ICKD_HAVE_NEON
