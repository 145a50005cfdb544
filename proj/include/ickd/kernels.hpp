#pragma once

#include <cstddef>
#include <string>

namespace ickd::kernels {

// Function table for the hot inner loops (dot products, reductions, fused
// scaled adds). The scalar lane is the reference: strict left-to-right
// evaluation, reproducible on any IEEE-754 platform. The SIMD lanes use a
// fixed blocked accumulation order instead; they are deterministic on a
// given machine and are equivalence-tested against the scalar lane.
struct Ops {
    const char* name;
    // sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // sum_i a[i]
    double (*sum)(const double* a, std::size_t n);
    // max_i a[i]; -inf for n == 0
    double (*max)(const double* a, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

// The left-to-right reference lane. Always available.
const Ops& scalar_ops();

// Lane picked at first use: AVX2+FMA on x86-64 or NEON on arm64 when the
// CPU has it, scalar otherwise. The environment variable ICKD_KERNELS
// (scalar|avx2|neon|auto) overrides the pick; an unavailable request falls
// back to scalar.
const Ops& active();

// Forces a lane by name. Returns false (and leaves the selection unchanged)
// if that lane is not compiled in or the CPU lacks it. Test hook; not for
// use while other threads are inside kernel calls.
bool force_lane(const std::string& name);

// Lanes usable on this build + CPU, e.g. {"scalar", "avx2"}.
std::size_t available_lanes(const Ops** out, std::size_t cap);

} // namespace ickd::kernels
