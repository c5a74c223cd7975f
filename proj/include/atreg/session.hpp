// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

// Interactive registration session: the user picks an anchor, every library
// model is fit there, and the best fit is shown. The user may then cycle to
// the next candidate or nudge the pose in camera coordinates, after which the
// active model is refit from the nudged pose.

#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "atreg/compute_pool.hpp"
#include "atreg/error.hpp"
#include "atreg/geom.hpp"
#include "atreg/icp.hpp"
#include "atreg/model_library.hpp"
#include "atreg/restart_search.hpp"
#include "atreg/spatial_index.hpp"

namespace atreg {

struct Scene {
  std::string scene_id;
  SpatialIndex index;

  Scene(std::string id, PointCloud cloud) : scene_id(std::move(id)), index(std::move(cloud)) {}
  const PointCloud& cloud() const { return index.cloud(); }
};

struct SlotMetrics {
  double fit_time = 0.0;  // seconds spent in fit_all for this slot
  std::size_t model_changes = 0;
  std::size_t corrections = 0;
};

struct CorrectionRecord {
  Vec3 delta_translation;           // camera frame
  UnitQuaternion delta_rotation;    // camera frame
  UnitQuaternion camera_orientation;  // world-from-camera
  Vec3 world_delta_translation;
  UnitQuaternion world_delta_rotation;
  FitResult resulting_fit;
};

struct ObjectSlot {
  std::string slot_id;
  Point3 anchor;
  std::vector<RankedFit> ranked;
  std::size_t active_index = 0;
  RigidTransform active_pose;
  std::vector<CorrectionRecord> history;
  bool accepted = false;
  SlotMetrics metrics;

  bool has_fit() const { return !ranked.empty(); }
  /// nullptr when unfit.
  const RankedFit* active() const { return ranked.empty() ? nullptr : &ranked[active_index]; }
};

/// Thrown by select_point when no model fits; the (unfit) slot is kept.
class NoFitFound : public Error {
 public:
  explicit NoFitFound(std::string slot_id)
      : Error(ErrorCode::kNoFitFound, "no model fits at the selected point (slot " + slot_id + ")"),
        slot_id_(std::move(slot_id)) {}
  const std::string& slot_id() const { return slot_id_; }

 private:
  std::string slot_id_;
};

struct WorldDelta {
  Vec3 translation;
  UnitQuaternion rotation;
};

/// world_t = C dt, world_r = C dr C^-1 for camera orientation C.
WorldDelta camera_to_world(const Vec3& delta_translation, const UnitQuaternion& delta_rotation,
                           const UnitQuaternion& camera_orientation);

/// Applies `delta` to `pose`, rotating about `pivot` (world coordinates):
/// p -> R_d (pose(p) - pivot) + pivot + t_d.
RigidTransform apply_world_delta(const RigidTransform& pose, const WorldDelta& delta,
                                 const Point3& pivot);

struct SessionConfig {
  IcpParams icp;
  /// translation_radius and rejection radius are replaced per model by its
  /// diameter.
  RestartParams restarts;
};

struct SessionSnapshot {
  std::string scene_id;
  std::uint64_t next_slot = 1;
  std::vector<ObjectSlot> slots;
};

class Session {
 public:
  Session(std::shared_ptr<const ModelLibrary> library, std::shared_ptr<const Scene> scene,
          SessionConfig config, ComputePool* pool = nullptr);

  /// Rebuilds a session from an exported snapshot. Throws
  /// Error(kSessionFormatError) if the scene id or a model id does not match.
  static std::unique_ptr<Session> restore(std::shared_ptr<const ModelLibrary> library,
                                          std::shared_ptr<const Scene> scene,
                                          SessionConfig config, const SessionSnapshot& snapshot,
                                          ComputePool* pool = nullptr);

  /// Allocates the id the next select_point(anchor, id) will fill.
  std::string reserve_slot_id();

  /// Fits all models at `anchor` into a new slot. Throws NoFitFound if the
  /// ranking is empty; the slot then exists unfit.
  ObjectSlot select_point(const Point3& anchor);
  /// As above into `slot_id`, which must be reserved, or an existing unfit
  /// slot (re-selection).
  ObjectSlot select_point(const Point3& anchor, const std::string& slot_id);

  /// Throws Error(kSlotNotFound | kSlotAccepted | kNoActiveFit).
  ObjectSlot cycle_model(const std::string& slot_id);
  ObjectSlot apply_correction(const std::string& slot_id, const Vec3& delta_translation,
                              const UnitQuaternion& delta_rotation,
                              const UnitQuaternion& camera_orientation);
  ObjectSlot accept_fit(const std::string& slot_id);

  ObjectSlot slot(const std::string& slot_id) const;
  SessionSnapshot snapshot() const;

  const ModelLibrary& library() const { return *library_; }
  const Scene& scene() const { return *scene_; }
  const SessionConfig& config() const { return config_; }

 private:
  ObjectSlot& find_locked(const std::string& slot_id);
  ObjectSlot& mutable_fitted_locked(const std::string& slot_id);

  std::shared_ptr<const ModelLibrary> library_;
  std::shared_ptr<const Scene> scene_;
  SessionConfig config_;
  ComputePool* pool_;

  std::mutex write_mu_;        // serializes mutations
  mutable std::mutex state_mu_;  // guards slots_ and next_slot_
  std::vector<ObjectSlot> slots_;
  std::uint64_t next_slot_ = 1;
};

}  // namespace atreg
