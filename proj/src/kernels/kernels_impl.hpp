#pragma once

#include "fne/kernels.hpp"

namespace fne::kernels {

namespace scalar {
const KernelTable& table();
}

#if defined(FNE_HAVE_AVX2)
namespace avx2 {
const KernelTable& table();
}
#endif

} // namespace fne::kernels
