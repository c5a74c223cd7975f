// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include "atreg/taskboard.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>

#include "atreg/error.hpp"
#include "atreg/json_codec.hpp"
#include "atreg/mesh_primitives.hpp"
#include "atreg/model_library.hpp"
#include "atreg/ply.hpp"
#include "atreg/rng.hpp"

namespace atreg::taskboard {
namespace {

using namespace atreg::mesh;

constexpr double kPi = std::numbers::pi;

RigidTransform at(const Point3& p) { return {UnitQuaternion::identity(), p}; }

// Handwheel on a stem: three spokes and a knob on the rim.
TriangleMesh wheel_valve() {
  TriangleMesh m;
  append(m, transformed(box({0.05, 0.05, 0.02}), at({0, 0, 0.01})));
  append(m, rod({0, 0, 0.02}, {0, 0, 0.07}, 0.01));
  append(m, transformed(torus(0.08, 0.009), at({0, 0, 0.07})));
  for (int k = 0; k < 3; ++k) {
    const double a = 2.0 * kPi * k / 3.0;
    append(m, rod({0, 0, 0.07}, {0.08 * std::cos(a), 0.08 * std::sin(a), 0.07}, 0.006));
  }
  const double knob = kPi / 3.0;
  append(m, rod({0.08 * std::cos(knob), 0.08 * std::sin(knob), 0.07},
                {0.08 * std::cos(knob), 0.08 * std::sin(knob), 0.11}, 0.01));
  return m;
}

// Inline pipe with a one-sided lever.
TriangleMesh lever_valve() {
  TriangleMesh m;
  append(m, rod({-0.08, 0, 0}, {0.08, 0, 0}, 0.025));
  append(m, transformed(box({0.05, 0.05, 0.04}), at({0, 0, 0.02})));
  append(m, rod({0, 0, 0.04}, {0, 0, 0.07}, 0.01));
  append(m, transformed(box({0.15, 0.024, 0.01}), at({0.065, 0, 0.075})));
  return m;
}

// Body, bonnet and round cap are all symmetric about z; only the small
// index marker on the cap underside fixes the rotation. Fine tessellation
// keeps facets from creating preferred angles.
TriangleMesh ball_valve_visible() {
  constexpr std::size_t kSegments = 256;
  TriangleMesh m;
  append(m, sphere(0.04, 64, kSegments));
  append(m, transformed(cylinder(0.022, 0.06, kSegments), at({0, 0, -0.09})));
  append(m, transformed(cylinder(0.012, 0.035, kSegments), at({0, 0, 0.035})));
  append(m, transformed(cylinder(0.035, 0.01, kSegments), at({0, 0, 0.07})));
  return m;
}

TriangleMesh ball_valve() {
  TriangleMesh m = ball_valve_visible();
  append(m, transformed(box({0.012, 0.01, 0.01}), at({0.028, 0, 0.065})));
  return m;
}

// Housing with a mushroom button and a side tab.
TriangleMesh estop() {
  TriangleMesh m;
  append(m, transformed(box({0.08, 0.08, 0.06}), at({0, 0, 0.03})));
  append(m, transformed(cylinder(0.014, 0.02), at({0, 0, 0.06})));
  append(m, transformed(frustum(0.038, 0.022, 0.022), at({0, 0, 0.08})));
  append(m, transformed(box({0.024, 0.012, 0.03}), at({0.052, 0.015, 0.03})));
  append(m, transformed(box({0.05, 0.01, 0.015}), at({-0.01, -0.045, 0.045})));
  return m;
}

// Grab bar on two posts; the left foot is a wide plate, the right a small one.
TriangleMesh handle() {
  TriangleMesh m;
  append(m, rod({-0.09, 0, 0.06}, {0.09, 0, 0.06}, 0.011));
  append(m, rod({-0.08, 0, 0.005}, {-0.08, 0, 0.06}, 0.01));
  append(m, rod({0.08, 0, 0.005}, {0.08, 0, 0.06}, 0.01));
  append(m, transformed(box({0.05, 0.04, 0.01}), at({-0.085, 0.01, 0.005})));
  append(m, transformed(box({0.025, 0.025, 0.01}), at({0.08, 0, 0.005})));
  return m;
}

}  // namespace

std::vector<ObjectSpec> objects() {
  std::vector<ObjectSpec> out;
  auto add = [&](std::string id, std::string name, TriangleMesh mesh, TriangleMesh visible) {
    out.push_back({std::move(id), std::move(name), std::move(mesh), std::move(visible)});
  };
  add("wheel_valve", "Wheel valve", wheel_valve(), wheel_valve());
  add("lever_valve", "Lever valve", lever_valve(), lever_valve());
  add("ball_valve", "Ball valve", ball_valve(), ball_valve_visible());
  add("estop", "Emergency stop", estop(), estop());
  add("handle", "Bar handle", handle(), handle());
  return out;
}

Taskboard make_taskboard(const TaskboardOptions& options) {
  if (options.points_per_object < 3) {
    throw Error(ErrorCode::kInvalidArgument, "points_per_object must be >= 3");
  }
  if (!(options.noise_sigma >= 0.0) || !(options.spacing_factor > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "noise_sigma must be >= 0, spacing_factor > 0");
  }
  Taskboard board;
  board.objects = objects();
  for (const std::string& label : options.occluded) {
    const bool known = std::any_of(board.objects.begin(), board.objects.end(),
                                   [&](const ObjectSpec& o) { return o.model_id == label; });
    if (!known) {
      throw Error(ErrorCode::kInvalidArgument, "cannot occlude unknown object '" + label + "'");
    }
  }

  double largest = 0.0;
  std::vector<PointCloud> local;
  for (std::size_t i = 0; i < board.objects.size(); ++i) {
    Rng rng(derive_seed(options.seed, hash_string(board.objects[i].model_id)));
    local.push_back(sample_mesh(board.objects[i].visible_mesh, options.points_per_object, rng));
    largest = std::max(largest, model_diameter(local.back()));
  }
  const double spacing = options.spacing_factor * largest;

  // Objects stand upright in a row along x, each at a seeded yaw.
  Rng pose_rng(derive_seed(options.seed, 0x706f736573ULL));
  std::vector<PointCloud> world(board.objects.size());
  for (std::size_t i = 0; i < board.objects.size(); ++i) {
    const double yaw = pose_rng.uniform(-kPi, kPi);
    const double tilt = pose_rng.uniform(-0.2, 0.2);
    const UnitQuaternion r = UnitQuaternion::from_axis_angle({0, 0, 1}, yaw) *
                             UnitQuaternion::from_axis_angle({1, 0, 0}, tilt);
    const Point3 place{spacing * static_cast<double>(i), 0.0, 0.0};
    const Point3 c = centroid(local[i]);
    GroundTruth gt;
    gt.label = board.objects[i].model_id;
    gt.model_id = board.objects[i].model_id;
    gt.pose = {r, place - r.rotate(c)};
    gt.centroid = place;
    world[i] = transform_cloud(local[i], gt.pose);
    board.truth.push_back(gt);
  }

  // Camera in front of and above the row, looking at its middle.
  const Point3 target{spacing * 0.5 * static_cast<double>(board.objects.size() - 1), 0.0, 0.0};
  board.camera_position = target + Vec3{0.0, -1.5 * spacing, 1.0 * spacing};
  {
    const Vec3 forward = (target - board.camera_position) / (target - board.camera_position).norm();
    const Vec3 right = forward.cross(Vec3{0, 0, 1}) / forward.cross(Vec3{0, 0, 1}).norm();
    const Vec3 down = forward.cross(right);
    // Camera axes: x right, y down, z forward.
    const Mat3 m{right.x, down.x, forward.x, right.y, down.y, forward.y,
                 right.z, down.z, forward.z};
    board.camera_orientation = UnitQuaternion::from_matrix(m);
  }

  Rng noise_rng(derive_seed(options.seed, 0x6e6f697365ULL));
  for (std::size_t i = 0; i < world.size(); ++i) {
    PointCloud& pts = world[i];
    const bool occluded = std::find(options.occluded.begin(), options.occluded.end(),
                                    board.truth[i].label) != options.occluded.end();
    if (occluded) {
      // Empty the cone from the camera that just contains the object.
      const Vec3 axis = board.truth[i].centroid - board.camera_position;
      const double dist = axis.norm();
      double half = 0.0;
      for (const Point3& p : pts.points) {
        const Vec3 v = p - board.camera_position;
        half = std::max(half, std::acos(std::clamp(v.dot(axis) / (v.norm() * dist), -1.0, 1.0)));
      }
      half *= 1.05;
      PointCloud kept;
      for (const Point3& p : pts.points) {
        const Vec3 v = p - board.camera_position;
        const double a = std::acos(std::clamp(v.dot(axis) / (v.norm() * dist), -1.0, 1.0));
        if (a > half) kept.points.push_back(p);
      }
      pts = std::move(kept);
    }
    if (options.noise_sigma > 0.0) {
      for (Point3& p : pts.points) {
        p += Vec3{noise_rng.normal(), noise_rng.normal(), noise_rng.normal()} * options.noise_sigma;
      }
    }
    GroundTruth& gt = board.truth[i];
    gt.scene_points = pts.size();
    gt.anchor = gt.centroid;
    double best = std::numeric_limits<double>::infinity();
    for (const Point3& p : pts.points) {
      const double d = (p - gt.centroid).squared_norm();
      if (d < best) {
        best = d;
        gt.anchor = p;
      }
    }
    board.scene.points.insert(board.scene.points.end(), pts.points.begin(), pts.points.end());
  }
  return board;
}

void write_taskboard(const Taskboard& board, const std::string& dir, std::size_t sample_count) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "meshes", ec);
  if (ec) {
    throw Error(ErrorCode::kIoError, "cannot create '" + dir + "': " + ec.message());
  }
  LibraryManifest manifest;
  for (const ObjectSpec& o : board.objects) {
    const std::string rel = "meshes/" + o.model_id + ".ply";
    write_file((fs::path(dir) / rel).string(), write_ply(o.mesh, PlyFormat::kBinaryLittleEndian));
    manifest.entries.push_back({o.model_id, o.display_name, rel, sample_count});
  }
  write_file((fs::path(dir) / "scene.ply").string(),
             write_ply(board.scene, PlyFormat::kBinaryLittleEndian));
  write_file((fs::path(dir) / "manifest.json").string(), write_manifest(manifest));

  Json anchors = Json::array();
  Json truth = Json::array();
  for (const GroundTruth& gt : board.truth) {
    anchors.push_back({{"label", gt.label}, {"point", encode(gt.anchor)}});
    truth.push_back({{"label", gt.label},
                     {"model_id", gt.model_id},
                     {"pose", encode(gt.pose)},
                     {"anchor", encode(gt.anchor)},
                     {"scene_points", gt.scene_points}});
  }
  write_file((fs::path(dir) / "anchors.json").string(),
             canonical_dump(Json{{"anchors", anchors}}, 2));
  write_file((fs::path(dir) / "oracle.json").string(),
             canonical_dump(Json{{"camera_orientation", encode(board.camera_orientation)},
                                 {"objects", truth}},
                            2));
}

}  // namespace atreg::taskboard
