// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace atreg {

class Rng;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr bool operator==(const Vec3&) const = default;

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  constexpr double squared_norm() const { return dot(*this); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

using Point3 = Vec3;

/// Row-major 3x3 matrix; only used at the SVD boundary and for batch kernels.
using Mat3 = std::array<double, 9>;

/// Rotation as a unit quaternion. Always stored normalized with the
/// canonical sign (w >= 0, ties broken on the first non-zero component), so
/// q and -q serialize identically.
class UnitQuaternion {
 public:
  UnitQuaternion() = default;
  /// Normalizes the input; throws Error(kInvalidArgument) on a zero or
  /// non-finite quaternion.
  UnitQuaternion(double w, double x, double y, double z);

  static UnitQuaternion identity() { return {}; }
  static UnitQuaternion from_axis_angle(const Vec3& axis, double angle_rad);
  static UnitQuaternion from_matrix(const Mat3& m);
  /// Takes the components verbatim (no renormalization), so a serialized
  /// quaternion reloads bit-identically. Throws Error(kInvalidArgument) unless
  /// the norm is within `tolerance` of 1.
  static UnitQuaternion from_stored(double w, double x, double y, double z,
                                    double tolerance = 1e-9);

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }

  UnitQuaternion operator*(const UnitQuaternion& o) const;
  UnitQuaternion inverse() const;
  Vec3 rotate(const Vec3& v) const;
  Mat3 to_matrix() const;
  /// Rotation angle in [0, pi].
  double angle() const;
  /// Unit axis; returns +x for the identity rotation.
  Vec3 axis() const;

  bool operator==(const UnitQuaternion&) const = default;

 private:
  struct Raw {};
  UnitQuaternion(Raw, double w, double x, double y, double z);

  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

/// Geodesic angle between two rotations, in [0, pi].
double rotation_distance(const UnitQuaternion& a, const UnitQuaternion& b);

/// Interpolates from identity toward q by `fraction` of its angle.
UnitQuaternion scale_rotation(const UnitQuaternion& q, double fraction);

struct RigidTransform {
  UnitQuaternion rotation;
  Vec3 translation;

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Vec3& t) { return {UnitQuaternion{}, t}; }

  Point3 apply(const Point3& p) const { return rotation.rotate(p) + translation; }
  RigidTransform inverse() const;

  bool operator==(const RigidTransform&) const = default;
};

/// Returns the transform equivalent to applying `b` first, then `a`.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
inline Point3 apply(const RigidTransform& t, const Point3& p) { return t.apply(p); }
inline RigidTransform inverse(const RigidTransform& t) { return t.inverse(); }

struct Color {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Color&) const = default;
};

struct PointCloud {
  std::vector<Point3> points;
  /// Empty, or one entry per point. Carried through I/O, ignored by fitting.
  std::vector<Color> colors;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool operator==(const PointCloud&) const = default;
};

using Face = std::array<std::uint32_t, 3>;

struct TriangleMesh {
  std::vector<Point3> vertices;
  std::vector<Face> faces;

  bool operator==(const TriangleMesh&) const = default;
};

double triangle_area(const Point3& a, const Point3& b, const Point3& c);

/// Drops faces with out-of-range indices or zero area. Returns the number of
/// faces removed.
std::size_t drop_invalid_faces(TriangleMesh& mesh);

/// Area-weighted surface sampling: a face is drawn from the categorical
/// distribution over face areas, then a uniform barycentric point on it.
/// Throws Error(kEmptyMesh) when no face has positive area.
PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n, Rng& rng);

/// Axis-aligned bounding-box diagonal. Throws Error(kEmptyCloud).
double model_diameter(const PointCloud& cloud);

/// Throws Error(kEmptyCloud).
Point3 centroid(const PointCloud& cloud);

/// Uniform over SO(3) (Shoemake's subgroup construction).
UnitQuaternion random_rotation(Rng& rng);

PointCloud transform_cloud(const PointCloud& cloud, const RigidTransform& t);

}  // namespace atreg
