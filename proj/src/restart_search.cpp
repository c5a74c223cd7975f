// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include "atreg/restart_search.hpp"

#include <algorithm>
#include <optional>

#include "atreg/error.hpp"
#include "atreg/rng.hpp"

namespace atreg {
namespace {

Vec3 uniform_in_ball(Rng& rng, double radius) {
  Vec3 v;
  double n2 = 0.0;
  do {
    v = {rng.normal(), rng.normal(), rng.normal()};
    n2 = v.squared_norm();
  } while (n2 == 0.0);
  const double r = radius * std::cbrt(rng.uniform());
  return v * (r / std::sqrt(n2));
}

}  // namespace

void RestartParams::validate() const {
  if (restart_count < 1) {
    throw Error(ErrorCode::kInvalidArgument, "restart_count must be >= 1");
  }
  if (!(translation_radius > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "translation_radius must be positive");
  }
  if (!(epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "likelihood epsilon must be positive");
  }
}

RigidTransform restart_initialization(const Point3& anchor, const RestartParams& params,
                                      const Point3& model_centroid, std::size_t restart_index) {
  UnitQuaternion rotation;
  Vec3 offset;
  if (restart_index > 0) {
    Rng rng(derive_seed(params.seed, restart_index));
    rotation = random_rotation(rng);
    offset = uniform_in_ball(rng, params.translation_radius);
  }
  // p -> R (p - c) + anchor + u, so the centroid lands on anchor + u.
  return {rotation, anchor + offset - rotation.rotate(model_centroid)};
}

std::vector<RigidTransform> generate_initializations(const Point3& anchor,
                                                     const RestartParams& params,
                                                     const Point3& model_centroid) {
  params.validate();
  std::vector<RigidTransform> out;
  out.reserve(params.restart_count);
  for (std::size_t i = 0; i < params.restart_count; ++i) {
    out.push_back(restart_initialization(anchor, params, model_centroid, i));
  }
  return out;
}

bool fit_ranks_before(const FitResult& a, const FitResult& b) {
  if (a.likelihood != b.likelihood) {
    return a.likelihood > b.likelihood;
  }
  if (a.weighted_residual != b.weighted_residual) {
    return a.weighted_residual < b.weighted_residual;
  }
  return a.restart_index < b.restart_index;
}

std::optional<FitResult> run_restart(const PointCloud& model_points, const SpatialIndex& scene,
                                     const Point3& anchor, const IcpParams& icp,
                                     const RestartParams& restarts, const Point3& model_centroid,
                                     std::size_t restart_index) {
  try {
    FitResult fit = run_icp(model_points, scene,
                            restart_initialization(anchor, restarts, model_centroid, restart_index),
                            icp);
    fit.restart_index = restart_index;
    fit.likelihood = likelihood_from_residual(fit.weighted_residual, restarts.epsilon);
    return fit;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoValidCorrespondences) {
      throw;
    }
  }
  return std::nullopt;
}

std::vector<FitResult> fit_with_restarts(const PointCloud& model_points,
                                         const SpatialIndex& scene, const Point3& anchor,
                                         const IcpParams& icp, const RestartParams& restarts,
                                         ComputePool* pool) {
  restarts.validate();
  icp.validate();
  const Point3 c = centroid(model_points);
  std::vector<std::optional<FitResult>> slots(restarts.restart_count);

  auto run_one = [&](std::size_t i) {
    slots[i] = run_restart(model_points, scene, anchor, icp, restarts, c, i);
  };
  if (pool != nullptr) {
    pool->parallel_for(slots.size(), run_one);
  } else {
    for (std::size_t i = 0; i < slots.size(); ++i) {
      run_one(i);
    }
  }

  std::vector<FitResult> fits;
  for (auto& s : slots) {
    if (s) {
      fits.push_back(std::move(*s));
    }
  }
  if (fits.empty()) {
    throw Error(ErrorCode::kAllRestartsFailed,
                "no restart produced a valid correspondence near the anchor");
  }
  std::sort(fits.begin(), fits.end(), fit_ranks_before);
  return fits;
}

}  // namespace atreg
