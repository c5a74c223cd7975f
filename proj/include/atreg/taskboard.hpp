// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

// Procedural five-object taskboard: object meshes, a fabricated scene cloud
// at known poses, and the ground truth the simulated operator works from.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atreg/geom.hpp"

namespace atreg::taskboard {

struct ObjectSpec {
  std::string model_id;
  std::string display_name;
  TriangleMesh mesh;
  /// What the sensor images. Equal to `mesh` except for the ball valve,
  /// whose index marker faces the board and is never seen.
  TriangleMesh visible_mesh;
};

/// wheel_valve, lever_valve, ball_valve, estop, handle.
std::vector<ObjectSpec> objects();

inline constexpr const char* kSymmetricObject = "ball_valve";
inline constexpr const char* kOccludableObject = "handle";

struct TaskboardOptions {
  std::uint64_t seed = 1;
  std::size_t points_per_object = 6000;
  /// Gaussian point noise, metres.
  double noise_sigma = 0.0;
  /// Objects whose view cone is emptied of points.
  std::vector<std::string> occluded;
  /// Object centres are this many largest-diameters apart.
  double spacing_factor = 4.0;
};

struct GroundTruth {
  std::string label;
  std::string model_id;
  /// Model frame to world.
  RigidTransform pose;
  /// World position of the model centroid: pose(centre of the mesh samples).
  Point3 centroid;
  /// Scene point nearest the centroid among the object's own points, or the
  /// centroid when the object left no points.
  Point3 anchor;
  std::size_t scene_points = 0;
};

struct Taskboard {
  std::vector<ObjectSpec> objects;
  PointCloud scene;
  std::vector<GroundTruth> truth;
  /// World-from-camera rotation of the viewpoint used for occlusion.
  UnitQuaternion camera_orientation;
  Point3 camera_position;
};

Taskboard make_taskboard(const TaskboardOptions& options);

/// Writes meshes/<id>.ply, scene.ply, manifest.json, anchors.json and
/// oracle.json under `dir` (created if needed). Throws Error(kIoError).
void write_taskboard(const Taskboard& board, const std::string& dir, std::size_t sample_count);

}  // namespace atreg::taskboard
