// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

// Weighted point-to-point ICP.
//
// Each iteration pairs every model sample with its nearest scene point,
// drops pairs farther apart than the rejection radius, weights the rest by
// w = 1 / (1 + d), and solves
//
//     argmin_{R,t} sum_i w_i |R p_i + t - q_i|^2
//
// in closed form (weighted centroids + SVD of the weighted cross-covariance,
// with a determinant fix so R is a proper rotation).

#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "atreg/geom.hpp"
#include "atreg/spatial_index.hpp"

namespace atreg {

inline constexpr double kDefaultLikelihoodEpsilon = 1e-9;

/// w(d) = 1 / (1 + d).
inline double correspondence_weight(double distance) { return 1.0 / (1.0 + distance); }

inline double likelihood_from_residual(double residual,
                                       double epsilon = kDefaultLikelihoodEpsilon) {
  return 1.0 / (residual + epsilon);
}

struct Correspondence {
  Point3 source;  // model sample under the pose being evaluated
  Point3 target;  // nearest scene point
  double distance = 0.0;
  double weight = 0.0;  // 0 when rejected
  bool rejected = false;
  std::size_t target_index = 0;
};

struct IcpParams {
  std::size_t max_iterations = 100;
  double relative_residual_tolerance = 1e-6;
  double absolute_residual_floor = 1e-12;
  double rejection_radius = std::numeric_limits<double>::infinity();

  /// Throws Error(kInvalidArgument).
  void validate() const;
};

struct FitResult {
  RigidTransform transform;
  double weighted_residual = 0.0;
  double likelihood = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t restart_index = 0;
  /// Iterations that fell back to a translation-only update.
  std::size_t degenerate_iterations = 0;
  /// Weighted residual at the initial pose followed by one entry per
  /// accepted iteration.
  std::vector<double> residual_trace;
};

std::vector<Correspondence> find_correspondences(const PointCloud& model_points,
                                                 const RigidTransform& pose,
                                                 const SpatialIndex& scene,
                                                 double rejection_radius);

/// Closed-form weighted alignment of the non-rejected pairs (source ->
/// target). Rejected entries are removed before any arithmetic, so passing
/// them or deleting them beforehand gives bit-identical results.
/// Throws Error(kDegenerateCorrespondences) with fewer than 3 usable pairs or
/// a rank < 2 cross-covariance (collinear configuration).
RigidTransform weighted_alignment(std::span<const Correspondence> correspondences);

/// sqrt(sum w d^2 / sum w) over non-rejected pairs.
/// Throws Error(kNoValidCorrespondences) when every pair is rejected.
double weighted_residual(std::span<const Correspondence> correspondences);

/// Throws Error(kNoValidCorrespondences) when no pair survives rejection at
/// `init`. Needs at least 3 model points.
FitResult run_icp(const PointCloud& model_points, const SpatialIndex& scene,
                  const RigidTransform& init, const IcpParams& params);

}  // namespace atreg
