// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

// Closed triangle-mesh primitives used to build procedural object models.

#pragma once

#include <cstddef>

#include "atreg/geom.hpp"

namespace atreg::mesh {

/// Axis-aligned box centred at the origin.
TriangleMesh box(const Vec3& size);

/// Closed cylinder along +z from z = 0 to z = height.
TriangleMesh cylinder(double radius, double height, std::size_t segments = 32);

/// Closed frustum along +z; top_radius may be 0 (cone).
TriangleMesh frustum(double bottom_radius, double top_radius, double height,
                     std::size_t segments = 32);

TriangleMesh sphere(double radius, std::size_t rings = 16, std::size_t segments = 32);

/// Torus in the xy-plane around the origin.
TriangleMesh torus(double major_radius, double minor_radius, std::size_t major_segments = 48,
                   std::size_t minor_segments = 16);

/// Closed cylinder between two points.
TriangleMesh rod(const Point3& from, const Point3& to, double radius, std::size_t segments = 16);

TriangleMesh transformed(const TriangleMesh& mesh, const RigidTransform& t);

/// Appends `part` to `into`.
void append(TriangleMesh& into, const TriangleMesh& part);

}  // namespace atreg::mesh
