// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "doctest.h"

#include "atreg/error.hpp"
#include "atreg/icp.hpp"
#include "atreg/rng.hpp"
#include "fixtures.hpp"
#include "pose_minimizer.hpp"

using namespace atreg;

namespace {

std::vector<Correspondence> pairs_from(const std::vector<Point3>& src, const RigidTransform& t,
                                       Rng& rng, double noise) {
  std::vector<Correspondence> out;
  for (const Point3& p : src) {
    Correspondence c;
    c.source = p;
    c.target = t.apply(p) + Vec3{rng.normal(), rng.normal(), rng.normal()} * noise;
    c.distance = (c.target - c.source).norm();
    c.weight = rng.uniform(0.05, 1.0);
    out.push_back(c);
  }
  return out;
}

bool same_transform(const RigidTransform& a, const RigidTransform& b) {
  const auto bits = [](double v) { return std::bit_cast<std::uint64_t>(v); };
  return bits(a.rotation.w()) == bits(b.rotation.w()) && bits(a.rotation.x()) == bits(b.rotation.x()) &&
         bits(a.rotation.y()) == bits(b.rotation.y()) && bits(a.rotation.z()) == bits(b.rotation.z()) &&
         bits(a.translation.x) == bits(b.translation.x) &&
         bits(a.translation.y) == bits(b.translation.y) &&
         bits(a.translation.z) == bits(b.translation.z);
}

}  // namespace

TEST_CASE("correspondence weight") {
  CHECK(correspondence_weight(0.0) == 1.0);
  CHECK(correspondence_weight(1.0) == 0.5);
  double last = 2.0;
  for (double d = 0.0; d < 50.0; d += 0.01) {
    const double w = correspondence_weight(d);
    CHECK(w < last);
    CHECK(w > 0.0);
    last = w;
  }
  CHECK(likelihood_from_residual(0.0) == doctest::Approx(1e9));
  CHECK(likelihood_from_residual(1.0, 0.0) == 1.0);
}

TEST_CASE("weighted alignment recovers an exact transform") {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    std::vector<Point3> src;
    for (int k = 0; k < 6; ++k) src.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    const RigidTransform truth{random_rotation(rng), {rng.uniform(-3, 3), 0.5, -1}};
    const RigidTransform got = weighted_alignment(pairs_from(src, truth, rng, 0.0));
    CHECK(rotation_distance(got.rotation, truth.rotation) < 1e-7);
    CHECK((got.translation - truth.translation).norm() < 1e-9);
  }
}

TEST_CASE("weighted alignment reaches the minimum of its objective") {
  Rng rng(8);
  for (int i = 0; i < 30; ++i) {
    std::vector<Point3> src;
    const int n = 3 + static_cast<int>(rng.below(6));
    for (int k = 0; k < n; ++k) src.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    const RigidTransform truth{random_rotation(rng), {rng.uniform(-1, 1), 0, 0}};
    const auto corr = pairs_from(src, truth, rng, 0.1);
    testing::WeightedPairs wp;
    for (const Correspondence& c : corr) {
      wp.source.push_back(c.source);
      wp.target.push_back(c.target);
      wp.weight.push_back(c.weight);
    }
    const double closed = testing::alignment_objective(wp, weighted_alignment(corr));
    const double numeric = testing::alignment_objective(wp, testing::minimize_alignment(wp, rng));
    CHECK(closed <= numeric * (1 + 1e-6) + 1e-15);
    CHECK(std::abs(closed - numeric) <= 1e-6 * std::max(numeric, 1e-12));
  }
}

TEST_CASE("rejected pairs have no influence at all") {
  Rng rng(9);
  const RigidTransform truth{random_rotation(rng), {0.2, 0.1, -0.3}};
  std::vector<Point3> src;
  for (int k = 0; k < 20; ++k) src.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
  auto all = pairs_from(src, truth, rng, 0.05);
  std::vector<Correspondence> kept;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (i % 3 == 0) {
      all[i].rejected = true;
      all[i].weight = 0.0;
      all[i].target = all[i].target + Vec3{100, -50, 7};
    } else {
      kept.push_back(all[i]);
    }
  }
  CHECK(same_transform(weighted_alignment(all), weighted_alignment(kept)));
  CHECK(weighted_residual(all) == weighted_residual(kept));
}

TEST_CASE("find_correspondences rejects pairs beyond the radius") {
  PointCloud scene;
  scene.points = {{0, 0, 0}, {1, 0, 0}};
  const SpatialIndex index(scene);
  PointCloud model;
  model.points = {{0.1, 0, 0}, {1, 0.5, 0}, {5, 0, 0}};
  const auto c = find_correspondences(model, RigidTransform::identity(), index, 1.0);
  REQUIRE(c.size() == 3);
  CHECK_FALSE(c[0].rejected);
  CHECK(c[0].target_index == 0);
  CHECK(c[0].weight == doctest::Approx(1.0 / 1.1));
  CHECK_FALSE(c[1].rejected);
  CHECK(c[1].weight == doctest::Approx(1.0 / 1.5));
  CHECK(c[2].rejected);
  CHECK(c[2].weight == 0.0);
}

TEST_CASE("degenerate and empty configurations") {
  std::vector<Correspondence> line;
  for (int i = 0; i < 5; ++i) {
    Correspondence c;
    c.source = {static_cast<double>(i), 0, 0};
    c.target = {static_cast<double>(i), 1, 0};
    c.weight = 1.0;
    line.push_back(c);
  }
  CHECK_THROWS_AS(weighted_alignment(line), Error);
  CHECK_THROWS_AS(weighted_alignment(std::span<const Correspondence>(line.data(), 2)), Error);
  for (auto& c : line) c.rejected = true;
  CHECK_THROWS_AS(weighted_residual(line), Error);
}

TEST_CASE("ICP parameter validation") {
  IcpParams p;
  CHECK_NOTHROW(p.validate());
  p.max_iterations = 0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.rejection_radius = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.relative_residual_tolerance = -1;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("ICP converges from a nearby pose and never increases the residual") {
  Rng rng(10);
  const TriangleMesh mesh = testing::basin_shape();
  const PointCloud model = sample_mesh(mesh, 1024, rng);
  const double diam = model_diameter(model);
  const RigidTransform truth{random_rotation(rng), {0.3, -0.2, 0.1}};
  const SpatialIndex scene(transform_cloud(model, truth));
  IcpParams params;
  params.rejection_radius = diam;
  const RigidTransform start =
      compose(RigidTransform{UnitQuaternion::from_axis_angle({1, 1, 0}, 0.1), {0.002, 0, 0}}, truth);
  const FitResult fit = run_icp(model, scene, start, params);
  CHECK(fit.converged);
  CHECK(rotation_distance(fit.transform.rotation, truth.rotation) < 1e-3);
  CHECK((fit.transform.translation - truth.translation).norm() < 1e-3 * diam);
  REQUIRE(fit.residual_trace.size() == fit.iterations + 1);
  for (std::size_t i = 1; i < fit.residual_trace.size(); ++i) {
    CHECK(fit.residual_trace[i] <= fit.residual_trace[i - 1]);
  }
  CHECK(fit.weighted_residual == fit.residual_trace.back());
  CHECK(fit.likelihood == likelihood_from_residual(fit.weighted_residual));
}

TEST_CASE("ICP with nothing in range fails") {
  PointCloud model;
  model.points = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  PointCloud far;
  far.points = {{100, 100, 100}};
  const SpatialIndex scene(far);
  IcpParams params;
  params.rejection_radius = 1.0;
  CHECK_THROWS_AS(run_icp(model, scene, RigidTransform::identity(), params), Error);
  model.points.resize(2);
  CHECK_THROWS_AS(run_icp(model, scene, RigidTransform::identity(), IcpParams{}), Error);
}

TEST_CASE("ICP falls back to translation when pairs are collinear") {
  // Every model point maps to the same scene point: rank-0 covariance.
  PointCloud model;
  model.points = {{0, 0, 0}, {0.01, 0, 0}, {0, 0.01, 0}, {0, 0, 0.01}};
  PointCloud one;
  one.points = {{1, 1, 1}};
  const SpatialIndex scene(one);
  const FitResult fit = run_icp(model, scene, RigidTransform::identity(), IcpParams{});
  CHECK(fit.degenerate_iterations >= 1);
  CHECK(fit.weighted_residual < 0.02);
}
