// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include "atreg/spatial_index.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "atreg/error.hpp"
#include "atreg/kernels.hpp"

namespace atreg {
namespace {

double coord(const Point3& p, int axis) { return axis == 0 ? p.x : (axis == 1 ? p.y : p.z); }

}  // namespace

SpatialIndex::SpatialIndex(PointCloud cloud) : cloud_(std::move(cloud)) {
  if (cloud_.empty()) {
    throw Error(ErrorCode::kEmptyCloud, "spatial index over an empty cloud");
  }
  if (cloud_.size() >= (std::size_t{1} << 31)) {
    throw Error(ErrorCode::kInvalidArgument, "spatial index supports fewer than 2^31 points");
  }
  const auto n = static_cast<std::uint32_t>(cloud_.size());
  ids_.resize(n);
  std::iota(ids_.begin(), ids_.end(), 0U);
  nodes_.reserve(2 * (n / kLeafSize + 1));
  build(0, n);

  xs_.resize(n);
  ys_.resize(n);
  zs_.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const Point3& p = cloud_.points[ids_[i]];
    xs_[i] = p.x;
    ys_[i] = p.y;
    zs_[i] = p.z;
  }
  build_grid();
}

void SpatialIndex::build_grid() {
  const std::size_t n = cloud_.size();
  Vec3 lo = cloud_.points[0];
  Vec3 hi = lo;
  for (const Point3& p : cloud_.points) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  const Vec3 ext = hi - lo;
  const double longest = std::max({ext.x, ext.y, ext.z});
  if (!(longest > 0.0) || !std::isfinite(longest)) {
    return;  // all points coincide; the kd-tree is enough
  }
  // Cell edge is a multiple of the typical point spacing, estimated from
  // the nearest distance from the first point of each kd leaf.
  std::vector<double> spacing;
  for (const Node& node : nodes_) {
    if (node.left >= 0 || node.end - node.begin < 2) {
      continue;
    }
    const std::uint32_t i = node.begin;
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t j = node.begin + 1; j < node.end; ++j) {
      const double dx = xs_[j] - xs_[i];
      const double dy = ys_[j] - ys_[i];
      const double dz = zs_[j] - zs_[i];
      best = std::min(best, dx * dx + dy * dy + dz * dz);
    }
    spacing.push_back(std::sqrt(best));
  }
  double cell = longest / 64.0;
  if (!spacing.empty()) {
    std::nth_element(spacing.begin(), spacing.begin() + spacing.size() / 2, spacing.end());
    cell = std::max(cell * 1e-3, kGridSpacingRatio * spacing[spacing.size() / 2]);
  }
  while ((ext.x / cell + 1) * (ext.y / cell + 1) * (ext.z / cell + 1) > kMaxGridTotal) {
    cell *= 1.25;
  }
  grid_lo_ = lo;
  inv_cell_ = 1.0 / cell;
  margin_ = 1e-12 * (longest + std::max({std::abs(lo.x), std::abs(lo.y), std::abs(lo.z),
                                         std::abs(hi.x), std::abs(hi.y), std::abs(hi.z)}));
  dims_ = {static_cast<std::int64_t>(ext.x * inv_cell_) + 1,
           static_cast<std::int64_t>(ext.y * inv_cell_) + 1,
           static_cast<std::int64_t>(ext.z * inv_cell_) + 1};
  const auto cells = static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]);

  auto cell_of = [&](const Point3& p) {
    const auto axis = [&](double v, double l, std::int64_t d) {
      return std::clamp<std::int64_t>(static_cast<std::int64_t>((v - l) * inv_cell_), 0, d - 1);
    };
    return static_cast<std::size_t>(axis(p.x, lo.x, dims_[0]) +
                                    dims_[0] * (axis(p.y, lo.y, dims_[1]) +
                                                dims_[1] * axis(p.z, lo.z, dims_[2])));
  };
  std::vector<std::size_t> owner(n);
  cell_start_.assign(cells + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    owner[i] = cell_of(cloud_.points[i]);
    ++cell_start_[owner[i] + 1];
  }
  for (std::size_t c = 0; c < cells; ++c) {
    cell_start_[c + 1] += cell_start_[c];
  }
  std::vector<std::uint32_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  gids_.resize(n);
  gx_.resize(n);
  gy_.resize(n);
  gz_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t slot = fill[owner[i]]++;
    gids_[slot] = static_cast<std::uint32_t>(i);
    gx_[slot] = cloud_.points[i].x;
    gy_[slot] = cloud_.points[i].y;
    gz_[slot] = cloud_.points[i].z;
  }
}

// Scans every cell meeting the bounding box of the ball of radius
// sqrt(best_d2) around q. False when that box is too large.
bool SpatialIndex::grid_search(const Point3& q, kernels::NearestState& state) const {
  if (cell_start_.empty()) {
    return false;
  }
  const double r = std::sqrt(state.best_d2) * (1.0 + 1e-9) + margin_;
  std::array<std::int64_t, 3> lo{};
  std::array<std::int64_t, 3> hi{};
  std::size_t span = 1;
  for (int a = 0; a < 3; ++a) {
    const double qa = coord(q, a);
    const double la = coord(grid_lo_, a);
    const double from = std::floor((qa - r - la) * inv_cell_);
    const double to = std::floor((qa + r - la) * inv_cell_);
    if (!(to >= 0.0) || !(from < static_cast<double>(dims_[a]))) {
      return false;
    }
    lo[a] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::max(from, -1.0)));
    hi[a] = std::min<std::int64_t>(dims_[a] - 1,
                                   static_cast<std::int64_t>(std::min(to, 1e15)));
    span *= static_cast<std::size_t>(hi[a] - lo[a] + 1);
    if (span > kMaxGridBox) {
      return false;
    }
  }
  const kernels::KernelTable& k = kernels::active();
  for (std::int64_t z = lo[2]; z <= hi[2]; ++z) {
    for (std::int64_t y = lo[1]; y <= hi[1]; ++y) {
      const std::int64_t row = dims_[0] * (y + dims_[1] * z);
      const std::uint32_t b = cell_start_[static_cast<std::size_t>(row + lo[0])];
      const std::uint32_t e = cell_start_[static_cast<std::size_t>(row + hi[0] + 1)];
      if (b == e) {
        continue;
      }
      const kernels::SoaView view{gx_.data() + b, gy_.data() + b, gz_.data() + b, e - b};
      k.nearest_scan(view, gids_.data() + b, q, state);
    }
  }
  return true;
}

std::int32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto self = static_cast<std::int32_t>(nodes_.size());
  Vec3 lo = cloud_.points[ids_[begin]];
  Vec3 hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    const Point3& p = cloud_.points[ids_[i]];
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  nodes_.push_back(Node{{lo.x, lo.y, lo.z}, {hi.x, hi.y, hi.z}, 0.0, begin, end, -1, -1, 0});
  if (end - begin <= kLeafSize) {
    return self;
  }
  const Vec3 ext = hi - lo;
  int axis = 0;
  if (ext.y > ext.x && ext.y >= ext.z) {
    axis = 1;
  } else if (ext.z > ext.x && ext.z > ext.y) {
    axis = 2;
  }
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(ids_.begin() + begin, ids_.begin() + mid, ids_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = coord(cloud_.points[a], axis);
                     const double cb = coord(cloud_.points[b], axis);
                     return ca < cb || (ca == cb && a < b);
                   });
  const double split = coord(cloud_.points[ids_[mid]], axis);
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  Node& node = nodes_[static_cast<std::size_t>(self)];
  node.split = split;
  node.axis = static_cast<std::uint8_t>(axis);
  node.left = left;
  node.right = right;
  return self;
}

SpatialIndex::Hit SpatialIndex::nearest(const Point3& q) const {
  return search(q, std::numeric_limits<double>::infinity(),
                std::numeric_limits<std::uint32_t>::max());
}

SpatialIndex::Hit SpatialIndex::nearest(const Point3& q, std::size_t hint) const {
  if (hint >= cloud_.size()) {
    return nearest(q);
  }
  const Point3& p = cloud_.points[hint];
  const double dx = p.x - q.x;
  const double dy = p.y - q.y;
  const double dz = p.z - q.z;
  const double d2 = dx * dx + dy * dy + dz * dz;
  kernels::NearestState state{d2, static_cast<std::uint32_t>(hint)};
  if (grid_search(q, state)) {
    return {state.best_id, std::sqrt(state.best_d2)};
  }
  return search(q, state.best_d2, state.best_id);
}

SpatialIndex::Hit SpatialIndex::search(const Point3& q, double best_d2,
                                       std::uint32_t best_id) const {
  kernels::NearestState state{best_d2, best_id};
  descend(0, q, kernels::active(), state);
  return {state.best_id, std::sqrt(state.best_d2)};
}

double SpatialIndex::box_d2(const Node& node, const Point3& q) const {
  const double qs[3] = {q.x, q.y, q.z};
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double below = node.lo[a] - qs[a];
    const double above = qs[a] - node.hi[a];
    const double d = std::max({below, above, 0.0});
    d2 += d * d;
  }
  return d2;
}

// Children are visited nearer box first. A box whose distance equals the
// current best is still visited: a tie at a lower point id may live there.
// Box distances are rounded, so they are compared with a small slack.
void SpatialIndex::descend(std::int32_t idx, const Point3& q, const kernels::KernelTable& k,
                           kernels::NearestState& state) const {
  const Node& node = nodes_[static_cast<std::size_t>(idx)];
  if (node.left < 0) {
    const kernels::SoaView view{xs_.data() + node.begin, ys_.data() + node.begin,
                                zs_.data() + node.begin, node.end - node.begin};
    k.nearest_scan(view, ids_.data() + node.begin, q, state);
    return;
  }
  const Node& l = nodes_[static_cast<std::size_t>(node.left)];
  const Node& r = nodes_[static_cast<std::size_t>(node.right)];
  const double dl = box_d2(l, q);
  const double dr = box_d2(r, q);
  const bool left_first = dl <= dr;
  const std::int32_t near = left_first ? node.left : node.right;
  const std::int32_t far = left_first ? node.right : node.left;
  const double d_near = left_first ? dl : dr;
  const double d_far = left_first ? dr : dl;
  if (d_near * (1.0 - 1e-12) <= state.best_d2) {
    descend(near, q, k, state);
  }
  if (d_far * (1.0 - 1e-12) <= state.best_d2) {
    descend(far, q, k, state);
  }
}

}  // namespace atreg
