#pragma once

#include "shq/kernels/kernels.hpp"

namespace shq::kernels {

const KernelTable& scalar_table();
#if defined(SHQ_WITH_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(SHQ_WITH_NEON)
const KernelTable& neon_table();
#endif

}  // namespace shq::kernels
