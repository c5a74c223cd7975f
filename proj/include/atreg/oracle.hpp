// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

// Simulated operator: knows the true model and pose of every object, cycles
// to the right model and nudges the pose until it is within tolerance.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "atreg/geom.hpp"
#include "atreg/json_codec.hpp"
#include "atreg/model_library.hpp"
#include "atreg/session.hpp"

namespace atreg {

struct OracleObject {
  std::string label;
  std::string model_id;
  RigidTransform pose;
};

struct OracleConfig {
  std::vector<OracleObject> objects;
  double rotation_threshold_deg = 2.0;
  /// Fraction of the model diameter.
  double translation_threshold = 0.01;
  /// Share of the remaining error removed per correction.
  double correction_fraction = 0.5;
  double max_rotation_step_deg = 30.0;
  /// Fraction of the model diameter.
  double max_translation_step = 0.25;
  std::size_t max_corrections = 10;
  /// World-from-camera rotation the corrections are expressed in.
  UnitQuaternion camera_orientation;

  /// Throws Error(kInvalidArgument).
  void validate() const;
  const OracleObject* find(std::string_view label) const;
};

/// Reads the oracle.json written by make-taskboard; optional threshold keys
/// override the defaults. Throws Error(kInvalidArgument).
OracleConfig parse_oracle(std::string_view json_text);

struct Anchor {
  std::string label;
  Point3 point;
};

/// {"anchors": [{"label", "point": [x, y, z]}]}. Throws Error(kInvalidArgument).
std::vector<Anchor> parse_anchors(std::string_view json_text);

struct PoseError {
  double rotation_deg = 0.0;
  /// Distance between the model centres under both poses.
  double translation = 0.0;
};

PoseError pose_error(const RigidTransform& estimate, const RigidTransform& truth,
                     const Point3& model_center);

/// One capped step toward the truth, in world frame, pivoting on the current
/// model centre.
WorldDelta oracle_step(const RigidTransform& estimate, const RigidTransform& truth,
                       const ModelEntry& model, const OracleConfig& config);

struct ObjectOutcome {
  std::string label;
  std::string model_id;
  std::string slot_id;
  /// 1-based rank of the true model in the fit ranking; 0 when absent.
  std::size_t truth_rank = 0;
  std::string final_model_id;
  bool success = false;
  /// "", "no_fit", "model_not_ranked" or "oracle_exhausted".
  std::string failure;
  double fit_time = 0.0;
  std::size_t model_changes = 0;
  std::size_t corrections = 0;
  PoseError error;
};

struct SimulationReport {
  std::vector<ObjectOutcome> objects;

  std::size_t successes() const;
  std::size_t rank1_correct() const;
  double mean_fit_time() const;
  double mean_model_changes() const;
  double mean_corrections() const;

  /// Comma-separated table, one row per object. fit_time is wall-clock, so
  /// leave it out when comparing runs.
  std::string csv(bool include_timing = true) const;
  Json summary(bool include_timing = true) const;
};

/// Runs select -> cycle -> correct -> accept for every anchor. Per-object
/// failures are recorded, not thrown. Throws Error(kInvalidArgument) when an
/// anchor has no ground truth.
SimulationReport simulate(Session& session, const ModelLibrary& library,
                          const OracleConfig& oracle, const std::vector<Anchor>& anchors);

}  // namespace atreg
