// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion. Criteria can be
// selected by name on the command line; the default runs all of them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "atreg/compute_pool.hpp"
#include "atreg/error.hpp"
#include "atreg/icp.hpp"
#include "atreg/json_codec.hpp"
#include "atreg/oracle.hpp"
#include "atreg/restart_search.hpp"
#include "atreg/rng.hpp"
#include "atreg/session.hpp"
#include "fixtures.hpp"
#include "ply_fuzz.hpp"
#include "pose_minimizer.hpp"
#include "protocol_script.hpp"

using namespace atreg;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Outcome {
  bool passed = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Point3 nearest_point(const PointCloud& c, const Point3& q) {
  Point3 best = c.points.front();
  for (const Point3& p : c.points) {
    if ((p - q).squared_norm() < (best - q).squared_norm()) best = p;
  }
  return best;
}

// ---------------------------------------------------------------------------

Outcome alignment_oracle() {
  Rng rng(20260101);
  int matched = 0;
  double worst = 0.0;
  double solver_time = 0.0;
  const auto t0 = Clock::now();
  for (int i = 0; i < 200; ++i) {
    const int n = 3 + static_cast<int>(rng.below(6));
    const double sigma = rng.uniform(0.0, 0.1);
    const RigidTransform truth{random_rotation(rng),
                               {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}};
    std::vector<Correspondence> pairs;
    testing::WeightedPairs wp;
    for (int k = 0; k < n; ++k) {
      Correspondence c;
      c.source = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      c.target = truth.apply(c.source) + Vec3{rng.normal(), rng.normal(), rng.normal()} * sigma;
      c.weight = 1.0 - rng.uniform();  // (0, 1]
      c.distance = (c.target - c.source).norm();
      pairs.push_back(c);
      wp.source.push_back(c.source);
      wp.target.push_back(c.target);
      wp.weight.push_back(c.weight);
    }
    const auto s0 = Clock::now();
    const RigidTransform closed = weighted_alignment(pairs);
    solver_time += seconds_since(s0);
    const double f_closed = testing::alignment_objective(wp, closed);
    const double f_numeric = testing::alignment_objective(wp, testing::minimize_alignment(wp, rng));
    // Relative to the optimum; a zero-noise optimum is compared at 1e-12.
    const double rel = std::abs(f_closed - f_numeric) / std::max(f_numeric, 1e-12);
    worst = std::max(worst, rel);
    matched += rel <= 1e-6 ? 1 : 0;
  }
  const double total = seconds_since(t0);
  return {matched == 200 && total < 1.0,
          fmt("%d/200 within 1e-6 (worst %.2e), %.3f s total, %.4f s in the closed form", matched,
              worst, total, solver_time)};
}

Outcome weight_function() {
  std::vector<std::string> bad;
  if (correspondence_weight(0.0) != 1.0) bad.push_back("w(0) != 1");
  if (correspondence_weight(1.0) != 0.5) bad.push_back("w(1) != 0.5");
  double last = correspondence_weight(0.0);
  for (int i = 1; i <= 100000; ++i) {
    const double w = correspondence_weight(i * 1e-3);
    if (!(w < last)) {
      bad.push_back(fmt("not decreasing at d=%g", i * 1e-3));
      break;
    }
    last = w;
  }

  // Rejection: pairs beyond the diameter must not change the transform.
  Rng rng(77);
  const PointCloud model = sample_mesh(testing::basin_shape(), 512, rng);
  const double diam = model_diameter(model);
  PointCloud scene = transform_cloud(model, {random_rotation(rng), {0.01, 0, 0}});
  for (int i = 0; i < 50; ++i) {
    scene.points.push_back(Point3{5.0 * diam, 0, 0} + Vec3{rng.uniform(0, 1), rng.uniform(0, 1), 0} * diam);
  }
  PointCloud probe = model;
  for (int i = 0; i < 40; ++i) probe.points.push_back({10.0 * diam, 0.1 * i, 0});
  const SpatialIndex index(scene);
  const auto all = find_correspondences(probe, RigidTransform::identity(), index, diam);
  std::vector<Correspondence> kept;
  std::size_t rejected = 0;
  for (const Correspondence& c : all) {
    if (c.rejected) {
      ++rejected;
      if (c.weight != 0.0) bad.push_back("rejected pair has weight");
      if (!(c.distance > diam)) bad.push_back("pair within the radius was rejected");
    } else {
      if (c.distance > diam) bad.push_back("pair beyond the radius kept");
      kept.push_back(c);
    }
  }
  if (rejected < 40) bad.push_back("far probes were not rejected");
  const RigidTransform a = weighted_alignment(all);
  const RigidTransform b = weighted_alignment(kept);
  if (!(a == b)) bad.push_back("transform changed after deleting rejected pairs");
  if (weighted_residual(all) != weighted_residual(kept)) bad.push_back("residual changed");

  std::string detail = fmt("%zu of %zu pairs rejected, transforms bit-identical", rejected, all.size());
  for (const std::string& s : bad) detail = s + "; " + detail;
  return {bad.empty(), detail};
}

Outcome synthetic_recovery() {
  std::vector<TriangleMesh> meshes;
  for (const taskboard::ObjectSpec& o : taskboard::objects()) {
    if (o.model_id != taskboard::kSymmetricObject) meshes.push_back(o.mesh);
  }
  meshes.push_back(testing::basin_shape());

  int recovered = 0;
  double worst_rot = 0.0;
  double worst_trans = 0.0;
  const auto t0 = Clock::now();
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(derive_seed(4242, static_cast<std::uint64_t>(trial)));
    const PointCloud model = sample_mesh(meshes[static_cast<std::size_t>(trial) % meshes.size()], 2048, rng);
    const double diam = model_diameter(model);
    const Point3 c = centroid(model);
    const RigidTransform truth{random_rotation(rng),
                               {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}};
    const SpatialIndex scene(transform_cloud(model, truth));

    const Vec3 axis = random_rotation(rng).rotate({1, 0, 0});
    Vec3 dir = random_rotation(rng).rotate({1, 0, 0});
    const WorldDelta kick{dir * (rng.uniform() * 0.05 * diam),
                          UnitQuaternion::from_axis_angle(axis, rng.uniform() * 10.0 * kDeg)};
    const RigidTransform start = apply_world_delta(truth, kick, truth.apply(c));

    IcpParams params;
    params.rejection_radius = diam;
    const FitResult fit = run_icp(model, scene, start, params);
    const double rot = rotation_distance(fit.transform.rotation, truth.rotation);
    const double trans = (fit.transform.apply(c) - truth.apply(c)).norm() / diam;
    worst_rot = std::max(worst_rot, rot);
    worst_trans = std::max(worst_trans, trans);
    recovered += rot <= 1e-3 && trans <= 1e-3 ? 1 : 0;
  }
  const double total = seconds_since(t0);
  return {recovered >= 99 && total < 10.0,
          fmt("%d/100 recovered (worst %.2e rad, %.2e diameters), %.2f s", recovered, worst_rot,
              worst_trans, total)};
}

Outcome basin_escape() {
  const TriangleMesh mesh = testing::basin_shape();
  const OracleConfig oracle;
  int single = 0;
  int many = 0;
  int corrected = 0;
  int largest_step_over = 0;
  const auto t0 = Clock::now();
  for (int s = 0; s < 50; ++s) {
    Rng model_rng(derive_seed(static_cast<std::uint64_t>(s), 1));
    ModelEntry entry;
    entry.sampled = sample_mesh(mesh, 2048, model_rng);
    entry.center = centroid(entry.sampled);
    entry.diameter = model_diameter(entry.sampled);
    const double diam = entry.diameter;
    const Point3 c = entry.center;
    const UnitQuaternion flip = UnitQuaternion::from_axis_angle({0, 0, 1}, std::numbers::pi);
    const RigidTransform truth{flip, c - flip.rotate(c)};
    Rng scene_rng(derive_seed(static_cast<std::uint64_t>(s), 2));
    const SpatialIndex scene(transform_cloud(sample_mesh(mesh, 8000, scene_rng), truth));
    const Point3 anchor = nearest_point(scene.cloud(), truth.apply(c));

    const auto good = [&](const RigidTransform& t) {
      const PoseError e = pose_error(t, truth, c);
      return e.rotation_deg <= oracle.rotation_threshold_deg &&
             e.translation <= oracle.translation_threshold * diam;
    };

    IcpParams icp;
    icp.rejection_radius = diam;
    RestartParams rp;
    rp.translation_radius = diam;
    rp.seed = static_cast<std::uint64_t>(s);
    rp.restart_count = 1;
    const FitResult flipped = fit_with_restarts(entry.sampled, scene, anchor, icp, rp).front();
    single += good(flipped.transform) ? 1 : 0;
    rp.restart_count = 32;
    many += good(fit_with_restarts(entry.sampled, scene, anchor, icp, rp).front().transform) ? 1 : 0;

    // One scripted correction, at most 30 degrees, then refit.
    const WorldDelta step = oracle_step(flipped.transform, truth, entry, oracle);
    largest_step_over += step.rotation.angle() > 30.0 * kDeg + 1e-12 ? 1 : 0;
    const RigidTransform nudged =
        apply_world_delta(flipped.transform, step, flipped.transform.apply(c));
    corrected += good(run_icp(entry.sampled, scene, nudged, icp).transform) ? 1 : 0;
  }
  return {single <= 5 && many >= 45 && corrected == 50 && largest_step_over == 0,
          fmt("restart_count=1 %d/50, restart_count=32 %d/50, one correction %d/50, %.1f s",
              single, many, corrected, seconds_since(t0))};
}

Outcome taskboard_simulation() {
  const std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  ComputePool pool(threads);
  SessionConfig config;  // 32 restarts
  testing::WorldOptions opts;
  opts.sample_count = 2048;
  opts.points_per_object = taskboard::TaskboardOptions{}.points_per_object;

  std::vector<std::string> bad;
  std::string detail;
  {
    const testing::World w = testing::make_world(opts);
    Session session(w.library, w.scene, config, &pool);
    const SimulationReport r = simulate(session, *w.library, w.oracle, w.anchors);
    std::string corrected;
    for (const ObjectOutcome& o : r.objects) {
      std::printf("  %-12s rank %zu  success %d  model_changes %zu  corrections %zu  "
                  "fit %.2f s  error %.3f deg %.2e m\n",
                  o.label.c_str(), o.truth_rank, o.success ? 1 : 0, o.model_changes,
                  o.corrections, o.fit_time, o.error.rotation_deg, o.error.translation);
      if (o.corrections > 0) corrected += (corrected.empty() ? "" : ",") + o.label;
    }
    if (r.successes() != 5) bad.push_back(fmt("%zu/5 accepted", r.successes()));
    if (r.rank1_correct() < 4) bad.push_back(fmt("%zu/5 at rank 1", r.rank1_correct()));
    if (corrected != taskboard::kSymmetricObject) {
      bad.push_back("corrected objects: [" + corrected + "]");
    }
    if (!(r.mean_fit_time() <= 10.0)) {
      bad.push_back(fmt("mean fit %.2f s over the 10 s budget (%zu hardware threads)",
                        r.mean_fit_time(), threads));
    }
    detail = fmt("%zu/5 accepted, %zu/5 rank 1, corrected [%s], mean fit %.2f s on %zu threads",
                 r.successes(), r.rank1_correct(), corrected.c_str(), r.mean_fit_time(), threads);
  }
  {
    opts.occluded = {taskboard::kOccludableObject};
    const testing::World w = testing::make_world(opts);
    Session session(w.library, w.scene, config, &pool);
    const SimulationReport r = simulate(session, *w.library, w.oracle, w.anchors);
    std::string failure;
    for (const ObjectOutcome& o : r.objects) {
      if (o.label == taskboard::kOccludableObject) failure = o.success ? "" : o.failure;
    }
    if (r.objects.size() != 5 || failure.empty()) {
      bad.push_back("occluded handle was not recorded as a failure");
    }
    detail += fmt("; occluded run: %zu objects reported, handle failure '%s'", r.objects.size(),
                  failure.c_str());
  }
  for (const std::string& s : bad) detail = s + "; " + detail;
  return {bad.empty(), detail};
}

Outcome determinism() {
  testing::WorldOptions opts;
  opts.sample_count = 1024;
  opts.points_per_object = 3000;
  const testing::World w = testing::make_world(opts);
  const SessionConfig config = testing::fast_config(8, 99);

  auto run = [&](std::size_t threads) {
    std::unique_ptr<ComputePool> pool;
    if (threads > 1) pool = std::make_unique<ComputePool>(threads);
    Session session(w.library, w.scene, config, pool.get());
    simulate(session, *w.library, w.oracle, w.anchors);
    return export_session(session.snapshot());
  };
  const std::string reference = run(1);
  std::vector<std::string> bad;
  if (run(1) != reference) bad.push_back("repeat run differs");
  for (std::size_t t : {2u, 3u, 8u}) {
    if (run(t) != reference) bad.push_back(fmt("%zu-way run differs", t));
  }
  // A restored session exports the same bytes.
  if (export_session(import_session(reference)) != reference) bad.push_back("re-export differs");
  std::string detail = fmt("%zu-byte export identical across 2 serial runs and 2, 3, 8 threads",
                           reference.size());
  for (const std::string& s : bad) detail = s + "; " + detail;
  return {bad.empty(), detail};
}

Outcome ply_fuzz() {
  Rng rng(1234567);
  int round_trips = 0;
  std::string first_mismatch;
  for (int i = 0; i < 1000; ++i) {
    const testing::RandomGeometry g = testing::random_geometry(rng);
    const std::string bin = testing::round_trip_mismatch(g, PlyFormat::kBinaryLittleEndian);
    const std::string asc = testing::round_trip_mismatch(g, PlyFormat::kAscii);
    if (bin.empty() && asc.empty()) {
      ++round_trips;
    } else if (first_mismatch.empty()) {
      first_mismatch = bin.empty() ? "ascii: " + asc : "binary: " + bin;
    }
  }
  int structured = 0;
  int parsed = 0;
  std::string first_problem;
  for (int i = 0; i < 10000; ++i) {
    const testing::RandomGeometry g = testing::random_geometry(rng, 40);
    const auto format = i % 2 ? PlyFormat::kAscii : PlyFormat::kBinaryLittleEndian;
    const std::string bytes = testing::mutate(testing::write_geometry(g, format), rng);
    const std::string problem = testing::parse_outcome_problem(bytes);
    if (problem.empty()) {
      ++structured;
      try {
        parse_ply(bytes);
        ++parsed;
      } catch (const Error&) {
      }
    } else if (first_problem.empty()) {
      first_problem = problem;
    }
  }
  std::string detail = fmt("%d/1000 round trips, %d/10000 mutations handled (%d still parsed)",
                           round_trips, structured, parsed);
  if (!first_mismatch.empty()) detail += "; " + first_mismatch;
  if (!first_problem.empty()) detail += "; " + first_problem;
  return {round_trips == 1000 && structured == 10000, detail};
}

Outcome protocol_conformance() {
  const testing::ScriptReport r = testing::run_protocol_script(testing::make_world());
  std::size_t passed = 0;
  for (const testing::ScriptCheck& c : r.checks) passed += c.passed ? 1 : 0;
  std::string detail = fmt("%zu/%zu checks, %zu message kinds", passed, r.checks.size(),
                           r.kinds_exercised.size());
  if (!r.all_passed()) detail += "; failed: " + r.failures();
  return {r.all_passed(), detail};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {"alignment_oracle", alignment_oracle},
      {"weight_function", weight_function},
      {"synthetic_recovery", synthetic_recovery},
      {"basin_escape", basin_escape},
      {"taskboard_simulation", taskboard_simulation},
      {"determinism", determinism},
      {"ply_fuzz", ply_fuzz},
      {"protocol_conformance", protocol_conformance},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.name) == wanted.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.passed ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.passed ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
