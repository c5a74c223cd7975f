// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <cmath>
#include <numbers>

#include "doctest.h"

#include "atreg/error.hpp"
#include "atreg/geom.hpp"
#include "atreg/rng.hpp"

using namespace atreg;

namespace {

constexpr double kPi = std::numbers::pi;

bool near(const Vec3& a, const Vec3& b, double tol = 1e-12) { return (a - b).norm() <= tol; }

// Pearson statistic against expected counts.
double chi_square(const std::vector<double>& observed, const std::vector<double>& expected) {
  double s = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    s += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
  }
  return s;
}

}  // namespace

TEST_CASE("quaternion normalizes and keeps a canonical sign") {
  const UnitQuaternion q(-2.0, 0.0, 0.0, 0.0);
  CHECK(q.w() == 1.0);
  const UnitQuaternion a(0.0, -1.0, 0.0, 0.0);
  const UnitQuaternion b(0.0, 1.0, 0.0, 0.0);
  CHECK(a == b);
  const UnitQuaternion c(-0.5, 0.5, -0.5, 0.5);
  CHECK(c.w() > 0.0);
  CHECK_THROWS_AS(UnitQuaternion(0, 0, 0, 0), Error);
  CHECK_THROWS_AS(UnitQuaternion(NAN, 1, 0, 0), Error);
}

TEST_CASE("from_stored keeps components verbatim and rejects non-unit input") {
  const UnitQuaternion r = UnitQuaternion::from_axis_angle({1, 2, 3}, 0.7);
  const UnitQuaternion s = UnitQuaternion::from_stored(r.w(), r.x(), r.y(), r.z());
  CHECK(s == r);
  CHECK_THROWS_AS(UnitQuaternion::from_stored(1.1, 0, 0, 0), Error);
}

TEST_CASE("rotation from axis angle acts as expected") {
  const UnitQuaternion q = UnitQuaternion::from_axis_angle({0, 0, 1}, kPi / 2);
  CHECK(near(q.rotate({1, 0, 0}), {0, 1, 0}));
  CHECK(q.angle() == doctest::Approx(kPi / 2));
  CHECK(near(q.axis(), {0, 0, 1}));
  CHECK(rotation_distance(q, UnitQuaternion::identity()) == doctest::Approx(kPi / 2));
  CHECK(rotation_distance(q, q) == doctest::Approx(0.0));
}

TEST_CASE("matrix round trip") {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const UnitQuaternion q = random_rotation(rng);
    const UnitQuaternion back = UnitQuaternion::from_matrix(q.to_matrix());
    CHECK(rotation_distance(q, back) < 1e-7);
  }
}

TEST_CASE("compose applies the right transform first") {
  Rng rng(9);
  const RigidTransform a{random_rotation(rng), {1, 2, 3}};
  const RigidTransform b{random_rotation(rng), {-4, 0.5, 2}};
  const Point3 p{0.3, -0.2, 0.9};
  CHECK(near(compose(a, b).apply(p), a.apply(b.apply(p))));
  CHECK(near(a.inverse().apply(a.apply(p)), p));
}

TEST_CASE("scale_rotation interpolates the angle") {
  const UnitQuaternion q = UnitQuaternion::from_axis_angle({0, 1, 0}, 1.2);
  CHECK(scale_rotation(q, 0.5).angle() == doctest::Approx(0.6));
  CHECK(scale_rotation(q, 0.0).angle() == doctest::Approx(0.0));
}

TEST_CASE("diameter and centroid") {
  PointCloud c;
  c.points = {{0, 0, 0}, {1, 2, 2}, {0.5, 1, 1}};
  CHECK(model_diameter(c) == doctest::Approx(3.0));
  CHECK(near(centroid(c), {0.5, 1, 1}));
  CHECK_THROWS_AS(model_diameter(PointCloud{}), Error);
  CHECK_THROWS_AS(centroid(PointCloud{}), Error);
}

TEST_CASE("drop_invalid_faces removes degenerate and out-of-range faces") {
  TriangleMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 0, 0}};
  m.faces = {{0, 1, 2}, {0, 1, 3}, {0, 1, 9}};
  CHECK(drop_invalid_faces(m) == 2);
  CHECK(m.faces.size() == 1);
}

TEST_CASE("sampling picks faces in proportion to area") {
  // Two triangles with areas 1 and 3 in separate planes.
  TriangleMesh m;
  m.vertices = {{0, 0, 0}, {2, 0, 0}, {0, 1, 0}, {0, 0, 5}, {3, 0, 5}, {0, 2, 5}};
  m.faces = {{0, 1, 2}, {3, 4, 5}};
  Rng rng(17);
  const std::size_t n = 40000;
  const PointCloud pts = sample_mesh(m, n, rng);
  REQUIRE(pts.size() == n);
  std::vector<double> counts(2, 0.0);
  for (const Point3& p : pts.points) counts[p.z > 2.5 ? 1 : 0] += 1.0;
  // 1 degree of freedom, p = 0.001 critical value.
  CHECK(chi_square(counts, {n * 0.25, n * 0.75}) < 10.83);
}

TEST_CASE("sampling is uniform within a triangle") {
  // Midpoint subdivision gives four sub-triangles of equal area.
  TriangleMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.faces = {{0, 1, 2}};
  Rng rng(23);
  const std::size_t n = 40000;
  const PointCloud pts = sample_mesh(m, n, rng);
  std::vector<double> counts(4, 0.0);
  for (const Point3& p : pts.points) {
    if (p.x < -1e-12 || p.y < -1e-12 || p.x + p.y > 1 + 1e-12) {
      FAIL("sample outside the triangle");
    }
    int cell = 3;  // central sub-triangle
    if (p.x > 0.5) cell = 0;
    else if (p.y > 0.5) cell = 1;
    else if (p.x + p.y < 0.5) cell = 2;
    counts[static_cast<std::size_t>(cell)] += 1.0;
  }
  // 3 degrees of freedom, p = 0.001.
  CHECK(chi_square(counts, std::vector<double>(4, n / 4.0)) < 16.27);
}

TEST_CASE("sampling an area-less mesh fails") {
  TriangleMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  m.faces = {{0, 1, 2}};
  Rng rng(1);
  CHECK_THROWS_AS(sample_mesh(m, 10, rng), Error);
}

TEST_CASE("random rotations follow the Haar angle distribution") {
  // CDF of the rotation angle is (t - sin t) / pi.
  Rng rng(31);
  const int n = 20000;
  std::array<double, 6> counts{};
  for (int i = 0; i < n; ++i) {
    const double a = random_rotation(rng).angle();
    const auto bin = static_cast<std::size_t>(std::min(5.0, std::floor(a / (kPi / 6))));
    counts[bin] += 1.0;
  }
  std::vector<double> observed(counts.begin(), counts.end());
  std::vector<double> expected;
  for (int b = 0; b < 6; ++b) {
    const double lo = b * kPi / 6;
    const double hi = (b + 1) * kPi / 6;
    expected.push_back(n * ((hi - std::sin(hi)) - (lo - std::sin(lo))) / kPi);
  }
  // 5 degrees of freedom, p = 0.001.
  CHECK(chi_square(observed, expected) < 20.52);
}

TEST_CASE("seed derivation separates streams") {
  CHECK(derive_seed(1, 2) != derive_seed(2, 1));
  CHECK(derive_seed(7, 0) != derive_seed(7, 1));
  CHECK(hash_string("ball_valve") != hash_string("handle"));
  Rng a(derive_seed(3, 4));
  Rng b(derive_seed(3, 4));
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
}
