// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

// Data-parallel inner loops of the registration pipeline. Each kernel has a
// scalar reference implementation and, where the host supports it, an AVX2
// variant. The active table is chosen once at first use from CPUID, and can be
// pinned with ATREG_KERNELS=scalar|avx2.
//
// nearest_scan and transform_points are bit-identical across variants (no FMA,
// same operation order per lane). The reductions (weighted_sums,
// weighted_cross_covariance, weighted_sq_sum) sum in a different order and
// agree to rounding only.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "atreg/geom.hpp"

namespace atreg::kernels {

struct SoaView {
  const double* x = nullptr;
  const double* y = nullptr;
  const double* z = nullptr;
  std::size_t size = 0;
};

struct SoaSpan {
  double* x = nullptr;
  double* y = nullptr;
  double* z = nullptr;
  std::size_t size = 0;
};

/// Running best for nearest-neighbour search, ordered lexicographically by
/// (squared distance, point id).
struct NearestState {
  double best_d2;
  std::uint32_t best_id;
};

struct WeightedSums {
  double weight = 0.0;
  Vec3 point;  // sum of w * p
};

struct KernelTable {
  std::string_view name;

  void (*nearest_scan)(SoaView pts, const std::uint32_t* ids, const Vec3& q,
                       NearestState& state);

  /// out[i] = r * in[i] + t; `out` must have in.size entries.
  void (*transform_points)(const Mat3& r, const Vec3& t, SoaView in, SoaSpan out);

  WeightedSums (*weighted_sums)(SoaView pts, const double* w);

  /// sum_i w_i (p_i - cp)(q_i - cq)^T, row-major.
  Mat3 (*weighted_cross_covariance)(SoaView src, SoaView dst, const double* w,
                                    const Vec3& cp, const Vec3& cq);

  /// sum_i w_i d_i^2
  double (*weighted_sq_sum)(const double* d, const double* w, std::size_t n);
};

const KernelTable& scalar_table();

/// nullptr when the variant was not compiled in or the CPU lacks AVX2.
const KernelTable* avx2_table();

/// The table used by the library.
const KernelTable& active();

/// Overrides the active table (tests, benchmarks). Not synchronized with
/// concurrent kernel calls; set it before starting work.
void set_active(const KernelTable& table);

}  // namespace atreg::kernels
