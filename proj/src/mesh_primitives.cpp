// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include "atreg/mesh_primitives.hpp"

#include <algorithm>
#include <numbers>

namespace atreg::mesh {
namespace {

using Index = std::uint32_t;

Index add(TriangleMesh& m, const Point3& p) {
  m.vertices.push_back(p);
  return static_cast<Index>(m.vertices.size() - 1);
}

void quad(TriangleMesh& m, Index a, Index b, Index c, Index d) {
  m.faces.push_back({a, b, c});
  m.faces.push_back({a, c, d});
}

}  // namespace

TriangleMesh box(const Vec3& size) {
  TriangleMesh m;
  const Vec3 h = size * 0.5;
  for (int i = 0; i < 8; ++i) {
    add(m, {(i & 1) ? h.x : -h.x, (i & 2) ? h.y : -h.y, (i & 4) ? h.z : -h.z});
  }
  quad(m, 0, 2, 3, 1);  // -z
  quad(m, 4, 5, 7, 6);  // +z
  quad(m, 0, 1, 5, 4);  // -y
  quad(m, 2, 6, 7, 3);  // +y
  quad(m, 0, 4, 6, 2);  // -x
  quad(m, 1, 3, 7, 5);  // +x
  return m;
}

TriangleMesh frustum(double bottom_radius, double top_radius, double height,
                     std::size_t segments) {
  TriangleMesh m;
  const Index bottom_center = add(m, {0.0, 0.0, 0.0});
  const Index top_center = add(m, {0.0, 0.0, height});
  const Index ring0 = static_cast<Index>(m.vertices.size());
  for (std::size_t i = 0; i < segments; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(segments);
    add(m, {bottom_radius * std::cos(a), bottom_radius * std::sin(a), 0.0});
    add(m, {top_radius * std::cos(a), top_radius * std::sin(a), height});
  }
  for (std::size_t i = 0; i < segments; ++i) {
    const auto j = (i + 1) % segments;
    const Index b0 = ring0 + static_cast<Index>(2 * i);
    const Index t0 = b0 + 1;
    const Index b1 = ring0 + static_cast<Index>(2 * j);
    const Index t1 = b1 + 1;
    m.faces.push_back({bottom_center, b1, b0});
    if (top_radius > 0.0) {
      m.faces.push_back({top_center, t0, t1});
      quad(m, b0, b1, t1, t0);
    } else {
      m.faces.push_back({b0, b1, t0});
    }
  }
  return m;
}

TriangleMesh cylinder(double radius, double height, std::size_t segments) {
  return frustum(radius, radius, height, segments);
}

TriangleMesh sphere(double radius, std::size_t rings, std::size_t segments) {
  TriangleMesh m;
  const Index north = add(m, {0.0, 0.0, radius});
  for (std::size_t r = 1; r < rings; ++r) {
    const double phi = std::numbers::pi * static_cast<double>(r) / static_cast<double>(rings);
    for (std::size_t s = 0; s < segments; ++s) {
      const double th = 2.0 * std::numbers::pi * static_cast<double>(s) / static_cast<double>(segments);
      add(m, {radius * std::sin(phi) * std::cos(th), radius * std::sin(phi) * std::sin(th),
              radius * std::cos(phi)});
    }
  }
  const Index south = add(m, {0.0, 0.0, -radius});
  auto at = [&](std::size_t r, std::size_t s) {
    return static_cast<Index>(1 + (r - 1) * segments + (s % segments));
  };
  for (std::size_t s = 0; s < segments; ++s) {
    m.faces.push_back({north, at(1, s), at(1, s + 1)});
    m.faces.push_back({south, at(rings - 1, s + 1), at(rings - 1, s)});
  }
  for (std::size_t r = 1; r + 1 < rings; ++r) {
    for (std::size_t s = 0; s < segments; ++s) {
      quad(m, at(r, s), at(r + 1, s), at(r + 1, s + 1), at(r, s + 1));
    }
  }
  return m;
}

TriangleMesh torus(double major_radius, double minor_radius, std::size_t major_segments,
                   std::size_t minor_segments) {
  TriangleMesh m;
  for (std::size_t i = 0; i < major_segments; ++i) {
    const double u = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(major_segments);
    for (std::size_t j = 0; j < minor_segments; ++j) {
      const double v = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(minor_segments);
      const double r = major_radius + minor_radius * std::cos(v);
      add(m, {r * std::cos(u), r * std::sin(u), minor_radius * std::sin(v)});
    }
  }
  auto at = [&](std::size_t i, std::size_t j) {
    return static_cast<Index>((i % major_segments) * minor_segments + (j % minor_segments));
  };
  for (std::size_t i = 0; i < major_segments; ++i) {
    for (std::size_t j = 0; j < minor_segments; ++j) {
      quad(m, at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
    }
  }
  return m;
}

TriangleMesh rod(const Point3& from, const Point3& to, double radius, std::size_t segments) {
  const Vec3 d = to - from;
  const double len = d.norm();
  const Vec3 z{0.0, 0.0, 1.0};
  const Vec3 axis = z.cross(d);
  UnitQuaternion q;
  if (axis.norm() > 1e-12 * len) {
    q = UnitQuaternion::from_axis_angle(axis, std::acos(std::clamp(d.z / len, -1.0, 1.0)));
  } else if (d.z < 0.0) {
    q = UnitQuaternion::from_axis_angle({1.0, 0.0, 0.0}, std::numbers::pi);
  }
  return transformed(cylinder(radius, len, segments), {q, from});
}

TriangleMesh transformed(const TriangleMesh& mesh, const RigidTransform& t) {
  TriangleMesh out = mesh;
  for (Point3& v : out.vertices) {
    v = t.apply(v);
  }
  return out;
}

void append(TriangleMesh& into, const TriangleMesh& part) {
  const auto base = static_cast<Index>(into.vertices.size());
  into.vertices.insert(into.vertices.end(), part.vertices.begin(), part.vertices.end());
  for (const Face& f : part.faces) {
    into.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
  }
}

}  // namespace atreg::mesh
