// AVX2+FMA lane. Compiled with -mavx2 -mfma on x86-64 only; callers must
// go through avx2_ops(), which checks the running CPU first.

#include "kernels_lanes.hpp"

#if defined(ICKD_HAVE_AVX2)

#include <immintrin.h>

#include <limits>

namespace ickd::kernels {

namespace {

// 4 doubles per vector, 4 independent accumulators -> 16 elements per
// unrolled step. The accumulation order is fixed, so results are
// deterministic even though they differ from left-to-right by rounding.
constexpr std::size_t kLanes = 4;
constexpr std::size_t kBlock = 4 * kLanes;

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double hmax(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_max_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_max_sd(lo, swapped));
}

double avx2_dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + kBlock <= n; i += kBlock) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
    }
    acc0 = _mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3));
    for (; i + kLanes <= n; i += kLanes)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double acc = hsum(acc0);
    for (; i < n; ++i)
        acc += a[i] * b[i];
    return acc;
}

double avx2_sum(const double* a, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + kBlock <= n; i += kBlock) {
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
        acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(a + i + 4));
        acc2 = _mm256_add_pd(acc2, _mm256_loadu_pd(a + i + 8));
        acc3 = _mm256_add_pd(acc3, _mm256_loadu_pd(a + i + 12));
    }
    acc0 = _mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3));
    for (; i + kLanes <= n; i += kLanes)
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
    double acc = hsum(acc0);
    for (; i < n; ++i)
        acc += a[i];
    return acc;
}

double avx2_max(const double* a, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    if (n >= kLanes) {
        __m256d acc = _mm256_loadu_pd(a);
        for (i = kLanes; i + kLanes <= n; i += kLanes)
            acc = _mm256_max_pd(acc, _mm256_loadu_pd(a + i));
        m = hmax(acc);
    }
    for (; i < n; ++i)
        if (a[i] > m)
            m = a[i];
    return m;
}

void avx2_axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i)
        y[i] += alpha * x[i];
}

constexpr Ops kAvx2{"avx2", avx2_dot, avx2_sum, avx2_max, avx2_axpy};

} // namespace

const Ops* avx2_ops() {
    static const bool supported =
        __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &kAvx2 : nullptr;
}

} // namespace ickd::kernels

#endif // ICKD_HAVE_AVX2
