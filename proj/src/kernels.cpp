#include "ickd/kernels.hpp"

#include "kernels_lanes.hpp"

#include <atomic>
#include <cstdlib>
#include <limits>

namespace ickd::kernels {

namespace {

double scalar_dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += a[i] * b[i];
    return acc;
}

double scalar_sum(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += a[i];
    return acc;
}

double scalar_max(const double* a, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        if (a[i] > m)
            m = a[i];
    return m;
}

void scalar_axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        y[i] += alpha * x[i];
}

constexpr Ops kScalar{"scalar", scalar_dot, scalar_sum, scalar_max, scalar_axpy};

const Ops* detect_best() {
#if defined(ICKD_HAVE_AVX2)
    if (const Ops* avx2 = avx2_ops())
        return avx2;
#endif
#if defined(ICKD_HAVE_NEON)
    if (const Ops* neon = neon_ops())
        return neon;
#endif
    return &kScalar;
}

const Ops* lane_by_name(const std::string& name) {
    if (name == "scalar")
        return &kScalar;
    if (name == "auto")
        return detect_best();
#if defined(ICKD_HAVE_AVX2)
    if (name == "avx2")
        return avx2_ops();
#endif
#if defined(ICKD_HAVE_NEON)
    if (name == "neon")
        return neon_ops();
#endif
    return nullptr;
}

const Ops* initial_lane() {
    if (const char* env = std::getenv("ICKD_KERNELS")) {
        if (const Ops* lane = lane_by_name(env))
            return lane;
        return &kScalar;
    }
    return detect_best();
}

std::atomic<const Ops*>& selection() {
    static std::atomic<const Ops*> sel{initial_lane()};
    return sel;
}

} // namespace

const Ops& scalar_ops() { return kScalar; }

const Ops& active() { return *selection().load(std::memory_order_relaxed); }

bool force_lane(const std::string& name) {
    const Ops* lane = lane_by_name(name);
    if (!lane)
        return false;
    selection().store(lane, std::memory_order_relaxed);
    return true;
}

std::size_t available_lanes(const Ops** out, std::size_t cap) {
    std::size_t n = 0;
    auto push = [&](const Ops* lane) {
        if (lane && n < cap)
            out[n++] = lane;
    };
    push(&kScalar);
#if defined(ICKD_HAVE_AVX2)
    push(avx2_ops());
#endif
#if defined(ICKD_HAVE_NEON)
    push(neon_ops());
#endif
    return n;
}

} // namespace ickd::kernels
