// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

// Compiled with -mavx2 (and deliberately without -mfma).

#include <immintrin.h>

#include "atreg/kernels.hpp"
#include "kernels_internal.hpp"

namespace atreg::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline bool better(double d2, std::uint32_t id, const NearestState& s) {
  return d2 < s.best_d2 || (d2 == s.best_d2 && id < s.best_id);
}

void nearest_scan(SoaView pts, const std::uint32_t* ids, const Vec3& q, NearestState& state) {
  const std::size_t n4 = pts.size & ~std::size_t{3};
  if (n4 != 0) {
    const __m256d qx = _mm256_set1_pd(q.x);
    const __m256d qy = _mm256_set1_pd(q.y);
    const __m256d qz = _mm256_set1_pd(q.z);
    __m256d lane_d2 = _mm256_set1_pd(state.best_d2);
    __m256d lane_id = _mm256_set1_pd(static_cast<double>(state.best_id));
    for (std::size_t i = 0; i < n4; i += 4) {
      const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(pts.x + i), qx);
      const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(pts.y + i), qy);
      const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(pts.z + i), qz);
      const __m256d d2 = _mm256_add_pd(
          _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)), _mm256_mul_pd(dz, dz));
      // Ids are < 2^31 (enforced by SpatialIndex), so the signed conversion is exact.
      const __m256d id = _mm256_cvtepi32_pd(
          _mm_loadu_si128(reinterpret_cast<const __m128i*>(ids + i)));
      const __m256d lt = _mm256_cmp_pd(d2, lane_d2, _CMP_LT_OQ);
      const __m256d tie = _mm256_and_pd(_mm256_cmp_pd(d2, lane_d2, _CMP_EQ_OQ),
                                        _mm256_cmp_pd(id, lane_id, _CMP_LT_OQ));
      const __m256d take = _mm256_or_pd(lt, tie);
      lane_d2 = _mm256_blendv_pd(lane_d2, d2, take);
      lane_id = _mm256_blendv_pd(lane_id, id, take);
    }
    alignas(32) double d2s[4];
    alignas(32) double idv[4];
    _mm256_store_pd(d2s, lane_d2);
    _mm256_store_pd(idv, lane_id);
    for (int k = 0; k < 4; ++k) {
      const auto id = static_cast<std::uint32_t>(idv[k]);
      if (better(d2s[k], id, state)) {
        state.best_d2 = d2s[k];
        state.best_id = id;
      }
    }
  }
  for (std::size_t i = n4; i < pts.size; ++i) {
    const double dx = pts.x[i] - q.x;
    const double dy = pts.y[i] - q.y;
    const double dz = pts.z[i] - q.z;
    const double d2 = dx * dx + dy * dy + dz * dz;
    if (better(d2, ids[i], state)) {
      state.best_d2 = d2;
      state.best_id = ids[i];
    }
  }
}

void transform_points(const Mat3& r, const Vec3& t, SoaView in, SoaSpan out) {
  const std::size_t n4 = in.size & ~std::size_t{3};
  const __m256d r0 = _mm256_set1_pd(r[0]), r1 = _mm256_set1_pd(r[1]), r2 = _mm256_set1_pd(r[2]);
  const __m256d r3 = _mm256_set1_pd(r[3]), r4 = _mm256_set1_pd(r[4]), r5 = _mm256_set1_pd(r[5]);
  const __m256d r6 = _mm256_set1_pd(r[6]), r7 = _mm256_set1_pd(r[7]), r8 = _mm256_set1_pd(r[8]);
  const __m256d tx = _mm256_set1_pd(t.x), ty = _mm256_set1_pd(t.y), tz = _mm256_set1_pd(t.z);
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d x = _mm256_loadu_pd(in.x + i);
    const __m256d y = _mm256_loadu_pd(in.y + i);
    const __m256d z = _mm256_loadu_pd(in.z + i);
    const __m256d ox = _mm256_add_pd(
        _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(r0, x), _mm256_mul_pd(r1, y)),
                      _mm256_mul_pd(r2, z)),
        tx);
    const __m256d oy = _mm256_add_pd(
        _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(r3, x), _mm256_mul_pd(r4, y)),
                      _mm256_mul_pd(r5, z)),
        ty);
    const __m256d oz = _mm256_add_pd(
        _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(r6, x), _mm256_mul_pd(r7, y)),
                      _mm256_mul_pd(r8, z)),
        tz);
    _mm256_storeu_pd(out.x + i, ox);
    _mm256_storeu_pd(out.y + i, oy);
    _mm256_storeu_pd(out.z + i, oz);
  }
  for (std::size_t i = n4; i < in.size; ++i) {
    const double x = in.x[i], y = in.y[i], z = in.z[i];
    out.x[i] = r[0] * x + r[1] * y + r[2] * z + t.x;
    out.y[i] = r[3] * x + r[4] * y + r[5] * z + t.y;
    out.z[i] = r[6] * x + r[7] * y + r[8] * z + t.z;
  }
}

WeightedSums weighted_sums(SoaView pts, const double* w) {
  const std::size_t n4 = pts.size & ~std::size_t{3};
  __m256d sw = _mm256_setzero_pd();
  __m256d sx = _mm256_setzero_pd();
  __m256d sy = _mm256_setzero_pd();
  __m256d sz = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d wi = _mm256_loadu_pd(w + i);
    sw = _mm256_add_pd(sw, wi);
    sx = _mm256_add_pd(sx, _mm256_mul_pd(wi, _mm256_loadu_pd(pts.x + i)));
    sy = _mm256_add_pd(sy, _mm256_mul_pd(wi, _mm256_loadu_pd(pts.y + i)));
    sz = _mm256_add_pd(sz, _mm256_mul_pd(wi, _mm256_loadu_pd(pts.z + i)));
  }
  WeightedSums s{hsum(sw), {hsum(sx), hsum(sy), hsum(sz)}};
  for (std::size_t i = n4; i < pts.size; ++i) {
    s.weight += w[i];
    s.point.x += w[i] * pts.x[i];
    s.point.y += w[i] * pts.y[i];
    s.point.z += w[i] * pts.z[i];
  }
  return s;
}

Mat3 weighted_cross_covariance(SoaView src, SoaView dst, const double* w, const Vec3& cp,
                               const Vec3& cq) {
  const std::size_t n4 = src.size & ~std::size_t{3};
  const __m256d cpx = _mm256_set1_pd(cp.x), cpy = _mm256_set1_pd(cp.y), cpz = _mm256_set1_pd(cp.z);
  const __m256d cqx = _mm256_set1_pd(cq.x), cqy = _mm256_set1_pd(cq.y), cqz = _mm256_set1_pd(cq.z);
  __m256d acc[9];
  for (auto& a : acc) {
    a = _mm256_setzero_pd();
  }
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d wi = _mm256_loadu_pd(w + i);
    const __m256d px = _mm256_mul_pd(wi, _mm256_sub_pd(_mm256_loadu_pd(src.x + i), cpx));
    const __m256d py = _mm256_mul_pd(wi, _mm256_sub_pd(_mm256_loadu_pd(src.y + i), cpy));
    const __m256d pz = _mm256_mul_pd(wi, _mm256_sub_pd(_mm256_loadu_pd(src.z + i), cpz));
    const __m256d qx = _mm256_sub_pd(_mm256_loadu_pd(dst.x + i), cqx);
    const __m256d qy = _mm256_sub_pd(_mm256_loadu_pd(dst.y + i), cqy);
    const __m256d qz = _mm256_sub_pd(_mm256_loadu_pd(dst.z + i), cqz);
    acc[0] = _mm256_add_pd(acc[0], _mm256_mul_pd(px, qx));
    acc[1] = _mm256_add_pd(acc[1], _mm256_mul_pd(px, qy));
    acc[2] = _mm256_add_pd(acc[2], _mm256_mul_pd(px, qz));
    acc[3] = _mm256_add_pd(acc[3], _mm256_mul_pd(py, qx));
    acc[4] = _mm256_add_pd(acc[4], _mm256_mul_pd(py, qy));
    acc[5] = _mm256_add_pd(acc[5], _mm256_mul_pd(py, qz));
    acc[6] = _mm256_add_pd(acc[6], _mm256_mul_pd(pz, qx));
    acc[7] = _mm256_add_pd(acc[7], _mm256_mul_pd(pz, qy));
    acc[8] = _mm256_add_pd(acc[8], _mm256_mul_pd(pz, qz));
  }
  Mat3 h;
  for (int k = 0; k < 9; ++k) {
    h[static_cast<std::size_t>(k)] = hsum(acc[k]);
  }
  for (std::size_t i = n4; i < src.size; ++i) {
    const double px = w[i] * (src.x[i] - cp.x);
    const double py = w[i] * (src.y[i] - cp.y);
    const double pz = w[i] * (src.z[i] - cp.z);
    const double qx = dst.x[i] - cq.x;
    const double qy = dst.y[i] - cq.y;
    const double qz = dst.z[i] - cq.z;
    h[0] += px * qx;
    h[1] += px * qy;
    h[2] += px * qz;
    h[3] += py * qx;
    h[4] += py * qy;
    h[5] += py * qz;
    h[6] += pz * qx;
    h[7] += pz * qy;
    h[8] += pz * qz;
  }
  return h;
}

double weighted_sq_sum(const double* d, const double* w, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t{3};
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d di = _mm256_loadu_pd(d + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), di), di));
  }
  double s = hsum(acc);
  for (std::size_t i = n4; i < n; ++i) {
    s += w[i] * d[i] * d[i];
  }
  return s;
}

}  // namespace

namespace detail {

const KernelTable& avx2_table_unchecked() {
  static const KernelTable table{
      "avx2",         &nearest_scan,    &transform_points, &weighted_sums,
      &weighted_cross_covariance, &weighted_sq_sum,
  };
  return table;
}

}  // namespace detail
}  // namespace atreg::kernels
