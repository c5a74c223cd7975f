// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "atreg/geom.hpp"
#include "atreg/kernels.hpp"

namespace atreg {

/// Exact nearest-neighbour index over an immutable cloud (kd-tree with SoA
/// leaf buckets scanned by the dispatched kernel, plus a uniform grid for
/// hinted queries whose bound is small). Ties in distance resolve to the
/// lowest point index. Safe for concurrent queries.
class SpatialIndex {
 public:
  struct Hit {
    std::size_t index;
    double distance;
  };

  /// Throws Error(kEmptyCloud) on an empty cloud.
  explicit SpatialIndex(PointCloud cloud);

  Hit nearest(const Point3& q) const;

  /// Same result as nearest(q); `hint` seeds the search bound, which makes
  /// repeated queries from slowly moving points (ICP) much cheaper.
  Hit nearest(const Point3& q, std::size_t hint) const;

  const PointCloud& cloud() const { return cloud_; }
  std::size_t size() const { return cloud_.size(); }

 private:
  static constexpr std::uint32_t kLeafSize = 64;

  struct Node {
    std::array<double, 3> lo{};  // tight bounds of the node's points
    std::array<double, 3> hi{};
    double split = 0.0;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;  // -1 marks a leaf
    std::int32_t right = -1;
    std::uint8_t axis = 0;
  };

  // Hinted queries scan the grid when their bounding box spans at most this
  // many cells.
  static constexpr std::size_t kMaxGridBox = 216;
  static constexpr double kGridSpacingRatio = 6.0;
  static constexpr double kMaxGridTotal = 16.0 * 1024 * 1024;

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void build_grid();
  bool grid_search(const Point3& q, kernels::NearestState& state) const;
  Hit search(const Point3& q, double best_d2, std::uint32_t best_id) const;
  void descend(std::int32_t idx, const Point3& q, const kernels::KernelTable& k,
               kernels::NearestState& state) const;
  double box_d2(const Node& node, const Point3& q) const;

  PointCloud cloud_;
  std::vector<std::uint32_t> ids_;
  std::vector<double> xs_;
  std::vector<double> ys_;
  std::vector<double> zs_;
  std::vector<Node> nodes_;

  // Grid: cell (i, j, k) holds gx_/gy_/gz_/gids_[cell_start_[c], cell_start_[c + 1])
  // with c = i + dims_[0] * (j + dims_[1] * k).
  Vec3 grid_lo_;
  double inv_cell_ = 0.0;
  double margin_ = 0.0;
  std::array<std::int64_t, 3> dims_{1, 1, 1};
  std::vector<std::uint32_t> cell_start_;
  std::vector<std::uint32_t> gids_;
  std::vector<double> gx_;
  std::vector<double> gy_;
  std::vector<double> gz_;
};

}  // namespace atreg
