// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"

#include <atomic>
#include <filesystem>

#include <unistd.h>

#include "atreg/mesh_primitives.hpp"

namespace atreg::testing {

TriangleMesh basin_shape() {
  TriangleMesh m;
  mesh::append(m, mesh::transformed(mesh::sphere(0.0137),
                                    {UnitQuaternion::identity(), {-0.0047, -0.0304, 0.0395}}));
  mesh::append(m, mesh::rod({0.0001, -0.0087, -0.0463}, {-0.0178, -0.0417, -0.0118}, 0.0082));
  return m;
}

World make_world(const WorldOptions& options) {
  World w;
  taskboard::TaskboardOptions tb;
  tb.seed = options.seed;
  tb.points_per_object = options.points_per_object;
  tb.occluded = options.occluded;
  w.board = taskboard::make_taskboard(tb);

  std::vector<std::pair<ManifestEntry, TriangleMesh>> models;
  for (const taskboard::ObjectSpec& o : w.board.objects) {
    models.push_back({{o.model_id, o.display_name, "", options.sample_count}, o.mesh});
  }
  w.library = std::make_shared<const ModelLibrary>(ModelLibrary::from_meshes(std::move(models), 0));
  w.scene = std::make_shared<const Scene>("taskboard", w.board.scene);

  w.oracle.camera_orientation = w.board.camera_orientation;
  for (const taskboard::GroundTruth& gt : w.board.truth) {
    w.oracle.objects.push_back({gt.label, gt.model_id, gt.pose});
    w.anchors.push_back({gt.label, gt.anchor});
  }
  return w;
}

SessionConfig fast_config(std::size_t restart_count, std::uint64_t seed) {
  SessionConfig c;
  c.restarts.restart_count = restart_count;
  c.restarts.seed = seed;
  return c;
}

std::string make_temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("atreg-" + tag + "-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace atreg::testing
