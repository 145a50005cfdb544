#pragma once

#include "ickd/kernels.hpp"

// Internal: lane factories compiled only on their platform. Each returns
// null when the running CPU lacks the instruction set.
namespace ickd::kernels {

#if defined(ICKD_HAVE_AVX2)
const Ops* avx2_ops();
#endif

#if defined(ICKD_HAVE_NEON)
const Ops* neon_ops();
#endif

} // namespace ickd::kernels
