// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include "atreg/geom.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

#include "atreg/error.hpp"
#include "atreg/rng.hpp"

namespace atreg {

UnitQuaternion::UnitQuaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::kInvalidArgument, "quaternion must be finite and non-zero");
  }
  w /= n;
  x /= n;
  y /= n;
  z /= n;
  bool flip = w < 0.0;
  if (w == 0.0) {
    flip = x < 0.0 || (x == 0.0 && (y < 0.0 || (y == 0.0 && z < 0.0)));
  }
  if (flip) {
    w = -w;
    x = -x;
    y = -y;
    z = -z;
  }
  // Avoid storing -0.0 so that equal rotations compare and print equal.
  w_ = w + 0.0;
  x_ = x + 0.0;
  y_ = y + 0.0;
  z_ = z + 0.0;
}

UnitQuaternion::UnitQuaternion(Raw, double w, double x, double y, double z)
    : w_(w), x_(x), y_(y), z_(z) {}

UnitQuaternion UnitQuaternion::from_stored(double w, double x, double y, double z,
                                           double tolerance) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!std::isfinite(n) || !(std::abs(n - 1.0) <= tolerance)) {
    throw Error(ErrorCode::kInvalidArgument, "quaternion is not unit length");
  }
  if (w < 0.0) {
    return {Raw{}, -w + 0.0, -x + 0.0, -y + 0.0, -z + 0.0};
  }
  return {Raw{}, w + 0.0, x + 0.0, y + 0.0, z + 0.0};
}

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3& axis, double angle_rad) {
  const double n = axis.norm();
  if (!(n > 0.0)) {
    return {};
  }
  const double s = std::sin(0.5 * angle_rad) / n;
  return {std::cos(0.5 * angle_rad), axis.x * s, axis.y * s, axis.z * s};
}

UnitQuaternion UnitQuaternion::from_matrix(const Mat3& m) {
  // Shepperd: branch on the largest of the four squared components.
  const double trace = m[0] + m[4] + m[8];
  if (trace >= m[0] && trace >= m[4] && trace >= m[8]) {
    const double s = std::sqrt(1.0 + trace) * 2.0;
    return {0.25 * s, (m[7] - m[5]) / s, (m[2] - m[6]) / s, (m[3] - m[1]) / s};
  }
  if (m[0] >= m[4] && m[0] >= m[8]) {
    const double s = std::sqrt(1.0 + m[0] - m[4] - m[8]) * 2.0;
    return {(m[7] - m[5]) / s, 0.25 * s, (m[1] + m[3]) / s, (m[2] + m[6]) / s};
  }
  if (m[4] >= m[8]) {
    const double s = std::sqrt(1.0 + m[4] - m[0] - m[8]) * 2.0;
    return {(m[2] - m[6]) / s, (m[1] + m[3]) / s, 0.25 * s, (m[5] + m[7]) / s};
  }
  const double s = std::sqrt(1.0 + m[8] - m[0] - m[4]) * 2.0;
  return {(m[3] - m[1]) / s, (m[2] + m[6]) / s, (m[5] + m[7]) / s, 0.25 * s};
}

UnitQuaternion UnitQuaternion::operator*(const UnitQuaternion& o) const {
  return {w_ * o.w_ - x_ * o.x_ - y_ * o.y_ - z_ * o.z_,
          w_ * o.x_ + x_ * o.w_ + y_ * o.z_ - z_ * o.y_,
          w_ * o.y_ - x_ * o.z_ + y_ * o.w_ + z_ * o.x_,
          w_ * o.z_ + x_ * o.y_ - y_ * o.x_ + z_ * o.w_};
}

UnitQuaternion UnitQuaternion::inverse() const { return {w_, -x_, -y_, -z_}; }

Vec3 UnitQuaternion::rotate(const Vec3& v) const {
  const Vec3 u{x_, y_, z_};
  const Vec3 t = u.cross(v) * 2.0;
  return v + t * w_ + u.cross(t);
}

Mat3 UnitQuaternion::to_matrix() const {
  const double xx = x_ * x_, yy = y_ * y_, zz = z_ * z_;
  const double xy = x_ * y_, xz = x_ * z_, yz = y_ * z_;
  const double wx = w_ * x_, wy = w_ * y_, wz = w_ * z_;
  return {1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz),       2.0 * (xz + wy),
          2.0 * (xy + wz),       1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx),
          2.0 * (xz - wy),       2.0 * (yz + wx),       1.0 - 2.0 * (xx + yy)};
}

double UnitQuaternion::angle() const {
  const double s = std::sqrt(x_ * x_ + y_ * y_ + z_ * z_);
  return 2.0 * std::atan2(s, w_);
}

Vec3 UnitQuaternion::axis() const {
  const Vec3 u{x_, y_, z_};
  const double s = u.norm();
  if (s == 0.0) {
    return {1.0, 0.0, 0.0};
  }
  return u / s;
}

double rotation_distance(const UnitQuaternion& a, const UnitQuaternion& b) {
  return (a * b.inverse()).angle();
}

UnitQuaternion scale_rotation(const UnitQuaternion& q, double fraction) {
  return UnitQuaternion::from_axis_angle(q.axis(), q.angle() * fraction);
}

RigidTransform RigidTransform::inverse() const {
  const UnitQuaternion inv = rotation.inverse();
  return {inv, -inv.rotate(translation)};
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {a.rotation * b.rotation, a.rotation.rotate(b.translation) + a.translation};
}

double triangle_area(const Point3& a, const Point3& b, const Point3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

std::size_t drop_invalid_faces(TriangleMesh& mesh) {
  const std::size_t n = mesh.vertices.size();
  const auto before = mesh.faces.size();
  std::erase_if(mesh.faces, [&](const Face& f) {
    if (f[0] >= n || f[1] >= n || f[2] >= n) {
      return true;
    }
    const double area =
        triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
    return !(area > 0.0) || !std::isfinite(area);
  });
  return before - mesh.faces.size();
}

PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n, Rng& rng) {
  const std::size_t nv = mesh.vertices.size();
  std::vector<std::size_t> face_ids;
  std::vector<double> cumulative;
  double total = 0.0;
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
    const Face& f = mesh.faces[i];
    if (f[0] >= nv || f[1] >= nv || f[2] >= nv) {
      continue;
    }
    const double area =
        triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
    if (!(area > 0.0) || !std::isfinite(area)) {
      continue;
    }
    total += area;
    face_ids.push_back(i);
    cumulative.push_back(total);
  }
  if (face_ids.empty()) {
    throw Error(ErrorCode::kEmptyMesh, "mesh has no face with positive area");
  }
  if (n == 0) {
    throw Error(ErrorCode::kInvalidArgument, "sample count must be at least 1");
  }

  PointCloud out;
  out.points.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double pick = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) {
      --it;
    }
    const Face& f = mesh.faces[face_ids[static_cast<std::size_t>(it - cumulative.begin())]];
    const Point3& a = mesh.vertices[f[0]];
    const Point3& b = mesh.vertices[f[1]];
    const Point3& c = mesh.vertices[f[2]];
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    out.points.push_back(a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2));
  }
  return out;
}

double model_diameter(const PointCloud& cloud) {
  if (cloud.empty()) {
    throw Error(ErrorCode::kEmptyCloud, "model_diameter of an empty cloud");
  }
  Vec3 lo = cloud.points.front();
  Vec3 hi = lo;
  for (const Point3& p : cloud.points) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  return (hi - lo).norm();
}

Point3 centroid(const PointCloud& cloud) {
  if (cloud.empty()) {
    throw Error(ErrorCode::kEmptyCloud, "centroid of an empty cloud");
  }
  Vec3 sum;
  for (const Point3& p : cloud.points) {
    sum += p;
  }
  return sum / static_cast<double>(cloud.size());
}

UnitQuaternion random_rotation(Rng& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  const double u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  return {b * std::cos(kTwoPi * u3), a * std::sin(kTwoPi * u2), a * std::cos(kTwoPi * u2),
          b * std::sin(kTwoPi * u3)};
}

PointCloud transform_cloud(const PointCloud& cloud, const RigidTransform& t) {
  PointCloud out;
  out.colors = cloud.colors;
  out.points.reserve(cloud.size());
  for (const Point3& p : cloud.points) {
    out.points.push_back(t.apply(p));
  }
  return out;
}

}  // namespace atreg
