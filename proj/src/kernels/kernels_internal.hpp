// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "atreg/kernels.hpp"

namespace atreg::kernels::detail {

// Defined in avx2.cpp when ATREG_HAVE_AVX2 is set; the caller checks CPUID.
const KernelTable& avx2_table_unchecked();

}  // namespace atreg::kernels::detail
