#pragma once

#include "mumar/simd.hpp"

namespace mumar::simd::detail {

const KernelTable* scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
const KernelTable* neon_table();  // nullptr when not compiled in

}  // namespace mumar::simd::detail
