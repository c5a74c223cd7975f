// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

// Shared scenes and helpers for the unit and acceptance suites.

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "atreg/geom.hpp"
#include "atreg/model_library.hpp"
#include "atreg/oracle.hpp"
#include "atreg/session.hpp"
#include "atreg/taskboard.hpp"

namespace atreg::testing {

/// Sphere on a bent rod: no rotational symmetry, and a 180-degree turn about
/// z through its centroid lands plain ICP in a wrong basin.
TriangleMesh basin_shape();

/// The taskboard at reduced density, with everything a session needs.
struct World {
  taskboard::Taskboard board;
  std::shared_ptr<const ModelLibrary> library;
  std::shared_ptr<const Scene> scene;
  OracleConfig oracle;
  std::vector<Anchor> anchors;
};

struct WorldOptions {
  std::size_t sample_count = 256;
  std::size_t points_per_object = 1500;
  std::uint64_t seed = 1;
  std::vector<std::string> occluded;
};

World make_world(const WorldOptions& options = {});

SessionConfig fast_config(std::size_t restart_count = 4, std::uint64_t seed = 0);

/// Fresh empty directory under the system temp path.
std::string make_temp_dir(const std::string& tag);

}  // namespace atreg::testing
