// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include "atreg/icp.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <optional>
#include <string>

#include "atreg/error.hpp"
#include "atreg/kernels.hpp"

namespace atreg {
namespace {

constexpr std::size_t kNoHint = static_cast<std::size_t>(-1);

// Ratio below which the second singular value marks a collinear set.
constexpr double kRankTolerance = 1e-10;

/// Compacted, SoA copy of the surviving pairs.
struct PairBuffers {
  std::vector<double> sx, sy, sz;
  std::vector<double> tx, ty, tz;
  std::vector<double> w, d;

  void clear() {
    sx.clear();
    sy.clear();
    sz.clear();
    tx.clear();
    ty.clear();
    tz.clear();
    w.clear();
    d.clear();
  }
  void push(const Point3& s, const Point3& t, double dist, double weight) {
    sx.push_back(s.x);
    sy.push_back(s.y);
    sz.push_back(s.z);
    tx.push_back(t.x);
    ty.push_back(t.y);
    tz.push_back(t.z);
    w.push_back(weight);
    d.push_back(dist);
  }
  std::size_t size() const { return w.size(); }
  kernels::SoaView source() const { return {sx.data(), sy.data(), sz.data(), sx.size()}; }
  kernels::SoaView target() const { return {tx.data(), ty.data(), tz.data(), tx.size()}; }

  double residual() const {
    const auto& k = kernels::active();
    double sum_w = 0.0;
    for (double wi : w) {
      sum_w += wi;
    }
    return std::sqrt(k.weighted_sq_sum(d.data(), w.data(), d.size()) / sum_w);
  }
};

struct Centroids {
  Vec3 source;
  Vec3 target;
};

Centroids weighted_centroids(const PairBuffers& pairs) {
  const auto& k = kernels::active();
  const kernels::WeightedSums s = k.weighted_sums(pairs.source(), pairs.w.data());
  const kernels::WeightedSums t = k.weighted_sums(pairs.target(), pairs.w.data());
  return {s.point / s.weight, t.point / t.weight};
}

/// Weighted Kabsch. nullopt when the configuration is degenerate.
std::optional<RigidTransform> solve_alignment(const PairBuffers& pairs, const Centroids& c) {
  if (pairs.size() < 3) {
    return std::nullopt;
  }
  const auto& k = kernels::active();
  const Mat3 h = k.weighted_cross_covariance(pairs.source(), pairs.target(), pairs.w.data(),
                                             c.source, c.target);
  const Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>> hm(h.data());
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(Eigen::Matrix3d(hm),
                                              Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  if (!(sv(0) > 0.0) || !(sv(1) > kRankTolerance * sv(0)) || !std::isfinite(sv(0))) {
    return std::nullopt;
  }
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Matrix3d fix = Eigen::Matrix3d::Identity();
  fix(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Eigen::Matrix3d r = v * fix * u.transpose();

  Mat3 rm;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      rm[static_cast<std::size_t>(3 * i + j)] = r(i, j);
    }
  }
  RigidTransform out;
  out.rotation = UnitQuaternion::from_matrix(rm);
  out.translation = c.target - out.rotation.rotate(c.source);
  return out;
}

PairBuffers compact(std::span<const Correspondence> correspondences) {
  PairBuffers pairs;
  for (const Correspondence& c : correspondences) {
    if (!c.rejected && c.weight > 0.0) {
      pairs.push(c.source, c.target, c.distance, c.weight);
    }
  }
  return pairs;
}

/// Per-call state for run_icp: model samples in SoA form plus scratch.
class IcpWorkspace {
 public:
  IcpWorkspace(const PointCloud& model, const SpatialIndex& scene, double radius)
      : scene_(scene), radius_(radius), hints_(model.size(), kNoHint) {
    const std::size_t n = model.size();
    mx_.resize(n);
    my_.resize(n);
    mz_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      mx_[i] = model.points[i].x;
      my_[i] = model.points[i].y;
      mz_[i] = model.points[i].z;
    }
    wx_.resize(n);
    wy_.resize(n);
    wz_.resize(n);
  }

  /// Re-pairs at `pose`; returns false when nothing survives rejection.
  bool evaluate(const RigidTransform& pose) {
    const auto& k = kernels::active();
    const std::size_t n = mx_.size();
    k.transform_points(pose.rotation.to_matrix(), pose.translation,
                       {mx_.data(), my_.data(), mz_.data(), n},
                       {wx_.data(), wy_.data(), wz_.data(), n});
    pairs_.clear();
    const PointCloud& cloud = scene_.cloud();
    for (std::size_t i = 0; i < n; ++i) {
      const Point3 q{wx_[i], wy_[i], wz_[i]};
      const SpatialIndex::Hit hit =
          hints_[i] == kNoHint ? scene_.nearest(q) : scene_.nearest(q, hints_[i]);
      hints_[i] = hit.index;
      if (hit.distance > radius_) {
        continue;
      }
      pairs_.push({mx_[i], my_[i], mz_[i]}, cloud.points[hit.index], hit.distance,
                  correspondence_weight(hit.distance));
    }
    return pairs_.size() > 0;
  }

  const PairBuffers& pairs() const { return pairs_; }

 private:
  const SpatialIndex& scene_;
  double radius_;
  std::vector<std::size_t> hints_;
  std::vector<double> mx_, my_, mz_;
  std::vector<double> wx_, wy_, wz_;
  PairBuffers pairs_;
};

}  // namespace

void IcpParams::validate() const {
  if (max_iterations < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_iterations must be >= 1");
  }
  if (!(relative_residual_tolerance > 0.0) || !(absolute_residual_floor > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "ICP tolerances must be positive");
  }
  if (!(rejection_radius > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rejection_radius must be positive");
  }
}

std::vector<Correspondence> find_correspondences(const PointCloud& model_points,
                                                 const RigidTransform& pose,
                                                 const SpatialIndex& scene,
                                                 double rejection_radius) {
  std::vector<Correspondence> out;
  out.reserve(model_points.size());
  for (const Point3& p : model_points.points) {
    Correspondence c;
    c.source = pose.apply(p);
    const SpatialIndex::Hit hit = scene.nearest(c.source);
    c.target_index = hit.index;
    c.target = scene.cloud().points[hit.index];
    c.distance = hit.distance;
    c.rejected = hit.distance > rejection_radius;
    c.weight = c.rejected ? 0.0 : correspondence_weight(hit.distance);
    out.push_back(c);
  }
  return out;
}

RigidTransform weighted_alignment(std::span<const Correspondence> correspondences) {
  const PairBuffers pairs = compact(correspondences);
  if (pairs.size() < 3) {
    throw Error(ErrorCode::kDegenerateCorrespondences,
                "need at least 3 usable correspondences, got " + std::to_string(pairs.size()));
  }
  const auto aligned = solve_alignment(pairs, weighted_centroids(pairs));
  if (!aligned) {
    throw Error(ErrorCode::kDegenerateCorrespondences,
                "rank-deficient cross-covariance (collinear correspondences)");
  }
  return *aligned;
}

double weighted_residual(std::span<const Correspondence> correspondences) {
  const PairBuffers pairs = compact(correspondences);
  if (pairs.size() == 0) {
    throw Error(ErrorCode::kNoValidCorrespondences, "every correspondence is rejected");
  }
  return pairs.residual();
}

FitResult run_icp(const PointCloud& model_points, const SpatialIndex& scene,
                  const RigidTransform& init, const IcpParams& params) {
  params.validate();
  if (model_points.size() < 3) {
    throw Error(ErrorCode::kInvalidArgument, "ICP needs at least 3 model points");
  }
  IcpWorkspace ws(model_points, scene, params.rejection_radius);
  if (!ws.evaluate(init)) {
    throw Error(ErrorCode::kNoValidCorrespondences,
                "no model point lies within the rejection radius of the scene");
  }

  FitResult result;
  result.transform = init;
  double previous = ws.pairs().residual();
  result.residual_trace.push_back(previous);

  for (std::size_t it = 1; it <= params.max_iterations; ++it) {
    const PairBuffers& pairs = ws.pairs();
    const Centroids c = weighted_centroids(pairs);
    RigidTransform candidate;
    if (auto aligned = solve_alignment(pairs, c)) {
      candidate = *aligned;
    } else {
      // Translation-only step: move the weighted source centroid onto the
      // weighted target centroid.
      candidate = result.transform;
      candidate.translation += c.target - result.transform.apply(c.source);
      ++result.degenerate_iterations;
    }

    if (!ws.evaluate(candidate)) {
      break;
    }
    const double current = ws.pairs().residual();
    if (current > previous) {
      result.converged = true;
      break;
    }
    result.transform = candidate;
    result.iterations = it;
    result.residual_trace.push_back(current);
    const double change =
        std::abs(previous - current) / std::max(previous, params.absolute_residual_floor);
    previous = current;
    if (change < params.relative_residual_tolerance) {
      result.converged = true;
      break;
    }
  }

  result.weighted_residual = previous;
  result.likelihood = likelihood_from_residual(previous);
  return result;
}

}  // namespace atreg
