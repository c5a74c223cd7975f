// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "atreg/kernels.hpp"
#include "kernels_internal.hpp"

namespace atreg::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* choose_default() {
  const KernelTable* simd = avx2_table();
  if (const char* env = std::getenv("ATREG_KERNELS")) {
    const std::string_view want{env};
    if (want == "scalar") {
      return &scalar_table();
    }
    if (want == "avx2" && simd != nullptr) {
      return simd;
    }
  }
  return simd != nullptr ? simd : &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{choose_default()};
  return current;
}

}  // namespace

const KernelTable* avx2_table() {
#ifdef ATREG_HAVE_AVX2
  static const bool supported = cpu_has_avx2();
  return supported ? &detail::avx2_table_unchecked() : nullptr;
#else
  (void)&cpu_has_avx2;
  return nullptr;
#endif
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void set_active(const KernelTable& table) { slot().store(&table, std::memory_order_release); }

}  // namespace atreg::kernels
