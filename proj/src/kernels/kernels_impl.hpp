#pragma once

#include "pminres/kernels.hpp"

namespace pminres::kernels::detail {

extern const Table kScalarTable;

#if defined(PMINRES_HAVE_AVX2)
extern const Table kAvx2Table;
#endif

}  // namespace pminres::kernels::detail
