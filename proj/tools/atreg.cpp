// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

// atreg: headless fitting, taskboard generation and simulation, and the
// session service.

#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "atreg/compute_pool.hpp"
#include "atreg/error.hpp"
#include "atreg/json_codec.hpp"
#include "atreg/model_library.hpp"
#include "atreg/oracle.hpp"
#include "atreg/ply.hpp"
#include "atreg/service.hpp"
#include "atreg/session.hpp"
#include "atreg/taskboard.hpp"

namespace {

using namespace atreg;

constexpr int kExitFailure = 1;
constexpr int kExitLoad = 2;

/// A file that could not be read or parsed.
struct LoadFailure {
  std::string message;
};

struct FitFlags {
  std::string scene;
  std::string manifest;
  std::uint64_t seed = 0;
  std::size_t restart_count = 32;
  std::optional<std::size_t> sample_count;
  std::size_t threads = 0;
  std::size_t max_iterations = 100;
  double relative_tolerance = 1e-6;
  double absolute_floor = 1e-12;
  double epsilon = kDefaultLikelihoodEpsilon;

  void add(CLI::App* app) {
    app->add_option("--scene", scene, "Scene point cloud (PLY)")->required();
    app->add_option("--manifest", manifest, "Model library manifest (JSON)")->required();
    app->add_option("--seed", seed, "Seed for sampling and restarts");
    app->add_option("--restart-count", restart_count, "ICP restarts per model");
    app->add_option("--sample-count", sample_count, "Points sampled per model (overrides manifest)");
    app->add_option("--threads", threads, "Compute threads, 0 = all cores");
    app->add_option("--max-iterations", max_iterations, "ICP iteration cap");
    app->add_option("--relative-tolerance", relative_tolerance,
                    "ICP stops when the relative residual change falls below this");
    app->add_option("--absolute-floor", absolute_floor, "Residual floor for the relative test");
    app->add_option("--likelihood-epsilon", epsilon, "Likelihood is 1 / (residual + epsilon)");
  }

  SessionConfig session_config() const {
    SessionConfig c;
    c.icp.max_iterations = max_iterations;
    c.icp.relative_residual_tolerance = relative_tolerance;
    c.icp.absolute_residual_floor = absolute_floor;
    c.restarts.restart_count = restart_count;
    c.restarts.seed = seed;
    c.restarts.epsilon = epsilon;
    return c;
  }
};

std::string read_input(const std::string& path, const char* what) {
  try {
    return read_file(path);
  } catch (const Error& e) {
    throw LoadFailure{std::string(what) + " '" + path + "': " + e.what()};
  }
}

std::shared_ptr<const ModelLibrary> load_library(const FitFlags& f) {
  try {
    LibraryManifest manifest = load_manifest(f.manifest);
    if (f.sample_count) {
      for (ManifestEntry& e : manifest.entries) e.sample_count = *f.sample_count;
    }
    return std::make_shared<const ModelLibrary>(ModelLibrary::load(manifest, f.seed));
  } catch (const Error& e) {
    throw LoadFailure{"manifest '" + f.manifest + "': " + e.what()};
  }
}

std::shared_ptr<const Scene> load_scene(const std::string& path) {
  try {
    PointCloud cloud = load_cloud(path);
    return std::make_shared<const Scene>(std::filesystem::path(path).stem().string(),
                                         std::move(cloud));
  } catch (const Error& e) {
    throw LoadFailure{"scene '" + path + "': " + e.what()};
  }
}

template <typename T, typename Fn>
T parse_input(const std::string& path, const char* what, Fn fn) {
  const std::string text = read_input(path, what);
  try {
    return fn(text);
  } catch (const Error& e) {
    throw LoadFailure{std::string(what) + " '" + path + "': " + e.what()};
  }
}

void write_output(const std::string& path, const std::string& data) {
  if (path == "-") {
    std::fwrite(data.data(), 1, data.size(), stdout);
    return;
  }
  write_file(path, data);
}

int cmd_fit(const FitFlags& f, const std::string& anchors_path, const std::string& out_path,
            bool timing) {
  const auto library = load_library(f);
  const auto scene = load_scene(f.scene);
  const auto anchors = parse_input<std::vector<Anchor>>(anchors_path, "anchors", parse_anchors);
  ComputePool pool(f.threads);
  Session session(library, scene, f.session_config(), &pool);

  std::printf("%-8s %-14s %4s %-14s %14s %14s %9s\n", "slot", "anchor", "rank", "model",
              "likelihood", "residual", "fit_time");
  std::size_t unfit = 0;
  for (const Anchor& a : anchors) {
    ObjectSlot slot;
    try {
      slot = session.select_point(a.point);
    } catch (const NoFitFound& e) {
      slot = session.slot(e.slot_id());
      ++unfit;
      std::printf("%-8s %-14s %4s %-14s %14s %14s %9.3f\n", slot.slot_id.c_str(), a.label.c_str(),
                  "-", "(no fit)", "-", "-", slot.metrics.fit_time);
      continue;
    }
    for (std::size_t i = 0; i < slot.ranked.size(); ++i) {
      const RankedFit& r = slot.ranked[i];
      std::printf("%-8s %-14s %4zu %-14s %14.6g %14.6g %9.3f\n",
                  i == 0 ? slot.slot_id.c_str() : "", i == 0 ? a.label.c_str() : "", i + 1,
                  r.model_id.c_str(), r.fit.likelihood, r.fit.weighted_residual,
                  i == 0 ? slot.metrics.fit_time : 0.0);
    }
  }
  if (!out_path.empty()) {
    ExportOptions options;
    options.include_timing = timing;
    write_output(out_path, export_session(session.snapshot(), options));
  }
  std::fprintf(stderr, "%zu of %zu anchors fitted\n", anchors.size() - unfit, anchors.size());
  return 0;
}

int cmd_simulate(const FitFlags& f, const std::string& oracle_path,
                 const std::string& anchors_path, const std::string& csv_path,
                 const std::string& summary_path, const std::string& export_path, bool timing) {
  const auto library = load_library(f);
  const auto scene = load_scene(f.scene);
  const OracleConfig oracle = parse_input<OracleConfig>(oracle_path, "oracle", parse_oracle);
  std::vector<Anchor> anchors;
  if (anchors_path.empty()) {
    const std::string text = read_input(oracle_path, "oracle");
    try {
      // Fall back to the anchors recorded next to the ground truth.
      const Json j = Json::parse(text);
      for (const Json& o : j.at("objects")) {
        anchors.push_back({o.at("label").get<std::string>(), decode_vec3(o.at("anchor"), "anchor")});
      }
    } catch (const std::exception& e) {
      throw LoadFailure{"oracle '" + oracle_path + "' has no anchors: " + e.what()};
    }
  } else {
    anchors = parse_input<std::vector<Anchor>>(anchors_path, "anchors", parse_anchors);
  }
  ComputePool pool(f.threads);
  Session session(library, scene, f.session_config(), &pool);
  const SimulationReport report = simulate(session, *library, oracle, anchors);

  write_output(csv_path, report.csv(timing));
  if (!summary_path.empty()) {
    write_output(summary_path, canonical_dump(report.summary(timing), 2));
  }
  if (!export_path.empty()) {
    write_output(export_path, export_session(session.snapshot(), {timing}));
  }
  std::fprintf(stderr, "%zu/%zu objects accepted, %zu correct at rank 1, mean fit %.3f s\n",
               report.successes(), report.objects.size(), report.rank1_correct(),
               report.mean_fit_time());
  return 0;
}

int cmd_make_taskboard(const taskboard::TaskboardOptions& options, const std::string& out,
                       std::size_t sample_count) {
  const taskboard::Taskboard board = taskboard::make_taskboard(options);
  taskboard::write_taskboard(board, out, sample_count);
  for (const taskboard::GroundTruth& gt : board.truth) {
    std::printf("%-12s %6zu points  anchor [%.4f, %.4f, %.4f]\n", gt.label.c_str(),
                gt.scene_points, gt.anchor.x, gt.anchor.y, gt.anchor.z);
  }
  return 0;
}

volatile std::sig_atomic_t g_stop = 0;

int cmd_serve(ServiceConfig config) {
  std::unique_ptr<Service> service;
  try {
    service = std::make_unique<Service>(std::move(config));
  } catch (const Error& e) {
    throw LoadFailure{e.what()};
  }
  service->start();
  std::fprintf(stderr, "listening on port %u\n", static_cast<unsigned>(service->port()));
  std::signal(SIGINT, [](int) { g_stop = 1; });
  std::signal(SIGTERM, [](int) { g_stop = 1; });
  while (g_stop == 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  service->stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Affordance-template registration: fit object models to point clouds"};
  app.require_subcommand(1);

  FitFlags fit_flags;
  std::string anchors_path;
  std::string out_path;
  bool fit_timing = false;
  CLI::App* fit = app.add_subcommand("fit", "Fit every model at each anchor and rank the fits");
  fit_flags.add(fit);
  fit->add_option("--anchors", anchors_path, "Anchors file (JSON)")->required();
  fit->add_option("--out", out_path, "Write the session export here ('-' for stdout)");
  fit->add_flag("--timing", fit_timing, "Include fit_time in the export");

  FitFlags sim_flags;
  std::string oracle_path;
  std::string sim_anchors;
  std::string csv_path = "-";
  std::string summary_path;
  std::string export_path;
  bool no_timing = false;
  CLI::App* sim = app.add_subcommand("simulate", "Run the taskboard with a simulated operator");
  sim_flags.add(sim);
  sim->add_option("--oracle", oracle_path, "Ground truth and operator settings (JSON)")->required();
  sim->add_option("--anchors", sim_anchors, "Anchors file; defaults to the oracle's anchors");
  sim->add_option("--csv", csv_path, "Metrics table ('-' for stdout)");
  sim->add_option("--summary", summary_path, "Structured summary (JSON)");
  sim->add_option("--export", export_path, "Session export after the run");
  sim->add_flag("--no-timing", no_timing, "Leave wall-clock fields out of every output");

  taskboard::TaskboardOptions board;
  std::string board_out;
  std::size_t board_samples = kDefaultSampleCount;
  CLI::App* make = app.add_subcommand("make-taskboard", "Generate the procedural taskboard");
  make->add_option("--out", board_out, "Output directory")->required();
  make->add_option("--seed", board.seed, "Scene seed");
  make->add_option("--points-per-object", board.points_per_object, "Scene points per object");
  make->add_option("--noise-sigma", board.noise_sigma, "Gaussian point noise (m)");
  make->add_option("--occlude", board.occluded, "Remove this object's points (repeatable)");
  make->add_flag("--occlude-handle", [&](std::int64_t) {
    board.occluded.push_back(taskboard::kOccludableObject);
  }, "Remove the handle's points");
  make->add_option("--spacing-factor", board.spacing_factor, "Object spacing in largest diameters");
  make->add_option("--sample-count", board_samples, "sample_count written to the manifest");

  std::string config_path;
  std::string listen;
  ServiceConfig serve_cfg;
  std::optional<std::string> serve_manifest, serve_scene;
  std::optional<std::size_t> serve_restarts, serve_samples, serve_threads;
  std::optional<std::uint64_t> serve_seed;
  CLI::App* serve = app.add_subcommand("serve", "Run the session service");
  serve->add_option("--config", config_path, "Service config (JSON)");
  serve->add_option("--listen", listen, "host:port");
  serve->add_option("--manifest", serve_manifest, "Model library manifest");
  serve->add_option("--scene", serve_scene, "Scene loaded as session 'default'");
  serve->add_option("--restart-count", serve_restarts, "ICP restarts per model");
  serve->add_option("--sample-count", serve_samples, "Points sampled per model");
  serve->add_option("--seed", serve_seed, "Seed");
  serve->add_option("--threads", serve_threads, "Compute threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) return cmd_fit(fit_flags, anchors_path, out_path, fit_timing);
    if (sim->parsed()) {
      return cmd_simulate(sim_flags, oracle_path, sim_anchors, csv_path, summary_path,
                          export_path, !no_timing);
    }
    if (make->parsed()) return cmd_make_taskboard(board, board_out, board_samples);
    if (serve->parsed()) {
      if (!config_path.empty()) {
        const std::string text = read_input(config_path, "config");
        try {
          serve_cfg = parse_service_config(text, serve_cfg);
        } catch (const Error& e) {
          throw LoadFailure{"config '" + config_path + "': " + e.what()};
        }
      }
      if (!listen.empty()) {
        serve_cfg = parse_service_config(Json{{"listen", listen}}.dump(), serve_cfg);
      }
      if (serve_manifest) serve_cfg.manifest_path = *serve_manifest;
      if (serve_scene) serve_cfg.scene_path = *serve_scene;
      if (serve_restarts) serve_cfg.restart_count = *serve_restarts;
      if (serve_samples) serve_cfg.sample_count = *serve_samples;
      if (serve_seed) serve_cfg.seed = *serve_seed;
      if (serve_threads) serve_cfg.threads = *serve_threads;
      if (serve_cfg.manifest_path.empty()) {
        std::fprintf(stderr, "atreg serve: a manifest is required (--manifest or config)\n");
        return kExitFailure;
      }
      return cmd_serve(serve_cfg);
    }
  } catch (const LoadFailure& e) {
    std::fprintf(stderr, "atreg: %s\n", e.message.c_str());
    return kExitLoad;
  } catch (const Error& e) {
    std::fprintf(stderr, "atreg: %s\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
