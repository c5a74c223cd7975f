// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include "atreg/session.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>

namespace atreg {
namespace {

constexpr std::string_view kSlotPrefix = "slot-";

std::optional<std::uint64_t> slot_number(std::string_view id) {
  if (id.substr(0, kSlotPrefix.size()) != kSlotPrefix) {
    return std::nullopt;
  }
  const std::string_view digits = id.substr(kSlotPrefix.size());
  std::uint64_t n = 0;
  const auto r = std::from_chars(digits.data(), digits.data() + digits.size(), n);
  if (r.ec != std::errc() || r.ptr != digits.data() + digits.size() || digits.empty()) {
    return std::nullopt;
  }
  return n;
}

}  // namespace

WorldDelta camera_to_world(const Vec3& delta_translation, const UnitQuaternion& delta_rotation,
                           const UnitQuaternion& camera_orientation) {
  return {camera_orientation.rotate(delta_translation),
          camera_orientation * delta_rotation * camera_orientation.inverse()};
}

RigidTransform apply_world_delta(const RigidTransform& pose, const WorldDelta& delta,
                                 const Point3& pivot) {
  return {delta.rotation * pose.rotation,
          delta.rotation.rotate(pose.translation - pivot) + pivot + delta.translation};
}

Session::Session(std::shared_ptr<const ModelLibrary> library, std::shared_ptr<const Scene> scene,
                 SessionConfig config, ComputePool* pool)
    : library_(std::move(library)), scene_(std::move(scene)), config_(config), pool_(pool) {
  if (!library_ || !scene_) {
    throw Error(ErrorCode::kInvalidArgument, "session needs a library and a scene");
  }
  config_.icp.validate();
  config_.restarts.validate();
}

std::unique_ptr<Session> Session::restore(std::shared_ptr<const ModelLibrary> library,
                                          std::shared_ptr<const Scene> scene,
                                          SessionConfig config, const SessionSnapshot& snapshot,
                                          ComputePool* pool) {
  auto s = std::make_unique<Session>(std::move(library), std::move(scene), config, pool);
  if (snapshot.scene_id != s->scene_->scene_id) {
    throw Error(ErrorCode::kSessionFormatError,
                "snapshot is for scene '" + snapshot.scene_id + "', loaded scene is '" +
                    s->scene_->scene_id + "'");
  }
  for (const ObjectSlot& slot : snapshot.slots) {
    const auto n = slot_number(slot.slot_id);
    if (!n || *n >= snapshot.next_slot) {
      throw Error(ErrorCode::kSessionFormatError, "bad slot id '" + slot.slot_id + "'");
    }
    for (const RankedFit& r : slot.ranked) {
      if (s->library_->find(r.model_id) == nullptr) {
        throw Error(ErrorCode::kSessionFormatError,
                    "snapshot references unknown model '" + r.model_id + "'");
      }
    }
    if (slot.has_fit() && slot.active_index >= slot.ranked.size()) {
      throw Error(ErrorCode::kSessionFormatError, "active_index out of range in " + slot.slot_id);
    }
  }
  s->slots_ = snapshot.slots;
  s->next_slot_ = snapshot.next_slot;
  return s;
}

std::string Session::reserve_slot_id() {
  std::lock_guard<std::mutex> lock(state_mu_);
  return std::string(kSlotPrefix) + std::to_string(next_slot_++);
}

ObjectSlot Session::select_point(const Point3& anchor) {
  return select_point(anchor, reserve_slot_id());
}

ObjectSlot Session::select_point(const Point3& anchor, const std::string& slot_id) {
  if (!anchor.finite()) {
    throw Error(ErrorCode::kInvalidArgument, "anchor must be finite");
  }
  std::lock_guard<std::mutex> writer(write_mu_);
  {
    std::lock_guard<std::mutex> lock(state_mu_);
    const auto n = slot_number(slot_id);
    if (!n || *n >= next_slot_) {
      throw Error(ErrorCode::kSlotNotFound, "slot '" + slot_id + "' was not reserved");
    }
    for (const ObjectSlot& s : slots_) {
      if (s.slot_id == slot_id && (s.has_fit() || s.accepted)) {
        throw Error(ErrorCode::kInvalidArgument, "slot '" + slot_id + "' is already fitted");
      }
    }
  }

  ObjectSlot slot;
  slot.slot_id = slot_id;
  slot.anchor = anchor;
  const auto start = std::chrono::steady_clock::now();
  slot.ranked = library_->fit_all(scene_->index, anchor, config_.icp, config_.restarts, pool_);
  slot.metrics.fit_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (slot.has_fit()) {
    slot.active_pose = slot.ranked.front().fit.transform;
  }

  {
    std::lock_guard<std::mutex> lock(state_mu_);
    auto it = std::find_if(slots_.begin(), slots_.end(),
                           [&](const ObjectSlot& s) { return s.slot_id == slot_id; });
    if (it != slots_.end()) {
      slot.metrics.model_changes = it->metrics.model_changes;
      slot.metrics.corrections = it->metrics.corrections;
      *it = slot;
    } else {
      const std::uint64_t n = *slot_number(slot_id);
      auto pos = std::find_if(slots_.begin(), slots_.end(),
                              [&](const ObjectSlot& s) { return *slot_number(s.slot_id) > n; });
      slots_.insert(pos, slot);
    }
  }
  if (!slot.has_fit()) {
    throw NoFitFound(slot_id);
  }
  return slot;
}

ObjectSlot& Session::find_locked(const std::string& slot_id) {
  for (ObjectSlot& s : slots_) {
    if (s.slot_id == slot_id) {
      return s;
    }
  }
  throw Error(ErrorCode::kSlotNotFound, "no slot '" + slot_id + "'");
}

ObjectSlot& Session::mutable_fitted_locked(const std::string& slot_id) {
  ObjectSlot& s = find_locked(slot_id);
  if (s.accepted) {
    throw Error(ErrorCode::kSlotAccepted, "slot '" + slot_id + "' is accepted");
  }
  if (!s.has_fit()) {
    throw Error(ErrorCode::kNoActiveFit, "slot '" + slot_id + "' has no fit");
  }
  return s;
}

ObjectSlot Session::cycle_model(const std::string& slot_id) {
  std::lock_guard<std::mutex> writer(write_mu_);
  std::lock_guard<std::mutex> lock(state_mu_);
  ObjectSlot& s = mutable_fitted_locked(slot_id);
  s.active_index = (s.active_index + 1) % s.ranked.size();
  s.active_pose = s.ranked[s.active_index].fit.transform;
  s.history.clear();
  ++s.metrics.model_changes;
  return s;
}

ObjectSlot Session::apply_correction(const std::string& slot_id, const Vec3& delta_translation,
                                     const UnitQuaternion& delta_rotation,
                                     const UnitQuaternion& camera_orientation) {
  if (!delta_translation.finite()) {
    throw Error(ErrorCode::kInvalidArgument, "delta_translation must be finite");
  }
  std::lock_guard<std::mutex> writer(write_mu_);
  std::string model_id;
  RigidTransform pose;
  std::size_t restart_index = 0;
  {
    std::lock_guard<std::mutex> lock(state_mu_);
    const ObjectSlot& s = mutable_fitted_locked(slot_id);
    model_id = s.ranked[s.active_index].model_id;
    pose = s.active_pose;
    restart_index = s.ranked[s.active_index].fit.restart_index;
  }
  const ModelEntry* model = library_->find(model_id);
  if (model == nullptr) {
    throw Error(ErrorCode::kNoActiveFit, "active model '" + model_id + "' is not in the library");
  }

  const WorldDelta world = camera_to_world(delta_translation, delta_rotation, camera_orientation);
  const RigidTransform corrected = apply_world_delta(pose, world, pose.apply(model->center));
  IcpParams icp = config_.icp;
  icp.rejection_radius = model->diameter;
  FitResult refit = run_icp(model->sampled, scene_->index, corrected, icp);
  refit.restart_index = restart_index;
  refit.likelihood = likelihood_from_residual(refit.weighted_residual, config_.restarts.epsilon);

  std::lock_guard<std::mutex> lock(state_mu_);
  ObjectSlot& s = mutable_fitted_locked(slot_id);
  s.ranked[s.active_index].fit = refit;
  s.active_pose = refit.transform;
  s.history.push_back(
      {delta_translation, delta_rotation, camera_orientation, world.translation, world.rotation,
       refit});
  ++s.metrics.corrections;
  return s;
}

ObjectSlot Session::accept_fit(const std::string& slot_id) {
  std::lock_guard<std::mutex> writer(write_mu_);
  std::lock_guard<std::mutex> lock(state_mu_);
  ObjectSlot& s = mutable_fitted_locked(slot_id);
  s.accepted = true;
  return s;
}

ObjectSlot Session::slot(const std::string& slot_id) const {
  std::lock_guard<std::mutex> lock(state_mu_);
  for (const ObjectSlot& s : slots_) {
    if (s.slot_id == slot_id) {
      return s;
    }
  }
  throw Error(ErrorCode::kSlotNotFound, "no slot '" + slot_id + "'");
}

SessionSnapshot Session::snapshot() const {
  std::lock_guard<std::mutex> lock(state_mu_);
  return {scene_->scene_id, next_slot_, slots_};
}

}  // namespace atreg
