#pragma once

#include "lodom/kernels.hpp"

namespace lodom::kernels::detail {

const Ops& scalar_ops();

#if defined(LODOM_HAVE_AVX2)
const Ops& avx2_ops();
#endif

// Scalar mirrors of the SSE/AVX min/max semantics: the second operand is
// returned whenever the comparison is false, including NaN inputs. The ray
// kernels rely on this to stay bit-identical across backends.
inline float min_f(float a, float b) { return a < b ? a : b; }
inline float max_f(float a, float b) { return a > b ? a : b; }

}  // namespace lodom::kernels::detail
