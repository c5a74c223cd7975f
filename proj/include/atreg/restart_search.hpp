// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "atreg/compute_pool.hpp"
#include "atreg/geom.hpp"
#include "atreg/icp.hpp"
#include "atreg/spatial_index.hpp"

namespace atreg {

struct RestartParams {
  std::size_t restart_count = 32;
  double translation_radius = 1.0;
  std::uint64_t seed = 0;
  double epsilon = kDefaultLikelihoodEpsilon;

  void validate() const;
};

struct RankedFit {
  std::string model_id;
  FitResult fit;
};

/// Restart 0 is the canonical start: identity rotation with the model
/// centroid exactly on the anchor. Restart i > 0 draws a uniform rotation and
/// a centroid offset uniform in the ball of radius translation_radius from its
/// own stream derive_seed(seed, i), so the list for n restarts is a prefix of
/// the list for n + 1.
std::vector<RigidTransform> generate_initializations(const Point3& anchor,
                                                     const RestartParams& params,
                                                     const Point3& model_centroid);

/// The single initialization for `restart_index` (same value as element
/// `restart_index` of generate_initializations).
RigidTransform restart_initialization(const Point3& anchor, const RestartParams& params,
                                      const Point3& model_centroid, std::size_t restart_index);

/// Runs ICP from every initialization and returns the successful fits sorted
/// by likelihood (descending), ties by lower restart index. Restarts whose
/// initial pose has no surviving correspondence are skipped; if none
/// survives, throws Error(kAllRestartsFailed). The output does not depend on
/// `pool` parallelism.
std::vector<FitResult> fit_with_restarts(const PointCloud& model_points,
                                         const SpatialIndex& scene, const Point3& anchor,
                                         const IcpParams& icp, const RestartParams& restarts,
                                         ComputePool* pool = nullptr);

/// Likelihood-descending order used everywhere fits are ranked.
/// One restart: ICP from restart_initialization(anchor, restarts, centroid, i).
/// nullopt when no correspondence survives rejection at the start pose.
std::optional<FitResult> run_restart(const PointCloud& model_points, const SpatialIndex& scene,
                                     const Point3& anchor, const IcpParams& icp,
                                     const RestartParams& restarts, const Point3& model_centroid,
                                     std::size_t restart_index);

bool fit_ranks_before(const FitResult& a, const FitResult& b);

}  // namespace atreg
