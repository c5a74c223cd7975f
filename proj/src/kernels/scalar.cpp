// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include "atreg/kernels.hpp"
#include "kernels_internal.hpp"

namespace atreg::kernels {
namespace {

void nearest_scan(SoaView pts, const std::uint32_t* ids, const Vec3& q, NearestState& state) {
  for (std::size_t i = 0; i < pts.size; ++i) {
    const double dx = pts.x[i] - q.x;
    const double dy = pts.y[i] - q.y;
    const double dz = pts.z[i] - q.z;
    const double d2 = dx * dx + dy * dy + dz * dz;
    if (d2 < state.best_d2 || (d2 == state.best_d2 && ids[i] < state.best_id)) {
      state.best_d2 = d2;
      state.best_id = ids[i];
    }
  }
}

void transform_points(const Mat3& r, const Vec3& t, SoaView in, SoaSpan out) {
  for (std::size_t i = 0; i < in.size; ++i) {
    const double x = in.x[i], y = in.y[i], z = in.z[i];
    out.x[i] = r[0] * x + r[1] * y + r[2] * z + t.x;
    out.y[i] = r[3] * x + r[4] * y + r[5] * z + t.y;
    out.z[i] = r[6] * x + r[7] * y + r[8] * z + t.z;
  }
}

WeightedSums weighted_sums(SoaView pts, const double* w) {
  WeightedSums s;
  for (std::size_t i = 0; i < pts.size; ++i) {
    s.weight += w[i];
    s.point.x += w[i] * pts.x[i];
    s.point.y += w[i] * pts.y[i];
    s.point.z += w[i] * pts.z[i];
  }
  return s;
}

Mat3 weighted_cross_covariance(SoaView src, SoaView dst, const double* w, const Vec3& cp,
                               const Vec3& cq) {
  Mat3 h{};
  for (std::size_t i = 0; i < src.size; ++i) {
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
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += w[i] * d[i] * d[i];
  }
  return s;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      "scalar",         &nearest_scan,    &transform_points, &weighted_sums,
      &weighted_cross_covariance, &weighted_sq_sum,
  };
  return table;
}

}  // namespace atreg::kernels
