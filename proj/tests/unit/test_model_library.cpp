// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <filesystem>

#include "doctest.h"

#include "atreg/error.hpp"
#include "atreg/mesh_primitives.hpp"
#include "atreg/model_library.hpp"
#include "atreg/ply.hpp"
#include "fixtures.hpp"

using namespace atreg;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("manifest parsing") {
  const auto m = parse_manifest(
      R"({"entries": [{"model_id": "a", "display_name": "A", "mesh_path": "m/a.ply"},
                      {"model_id": "b", "display_name": "B", "mesh_path": "/abs/b.ply", "sample_count": 99}]})",
      "/base");
  REQUIRE(m.entries.size() == 2);
  CHECK(m.entries[0].sample_count == kDefaultSampleCount);
  CHECK(m.entries[1].sample_count == 99);
  CHECK(m.resolve(m.entries[0]) == "/base/m/a.ply");
  CHECK(m.resolve(m.entries[1]) == "/abs/b.ply");
  const auto again = parse_manifest(write_manifest(m), "/base");
  CHECK(again.entries.size() == 2);
  CHECK(again.entries[1].mesh_path == "/abs/b.ply");

  for (const char* bad : {"[]", "{}", "not json", R"({"entries": [{"model_id": "a"}]})",
                          R"({"entries": [{"model_id": "", "display_name": "x", "mesh_path": "p"}]})",
                          R"({"entries": [{"model_id": "a", "display_name": "A", "mesh_path": "p", "sample_count": 0}]})"}) {
    CAPTURE(bad);
    CHECK(code_of([&] { parse_manifest(bad, "."); }) == ErrorCode::kManifestError);
  }
}

TEST_CASE("library load reports the failing model") {
  const std::string dir = testing::make_temp_dir("lib");
  write_file(dir + "/box.ply", write_ply(mesh::box({1, 1, 1}), PlyFormat::kAscii));
  write_file(dir + "/broken.ply", "ply\nformat ascii 1.0\nelement vertex 3\n");
  write_file(dir + "/m.json",
             R"({"entries": [{"model_id": "box", "display_name": "Box", "mesh_path": "box.ply", "sample_count": 64},
                             {"model_id": "broken", "display_name": "B", "mesh_path": "broken.ply"}]})");
  try {
    ModelLibrary::load(load_manifest(dir + "/m.json"), 0);
    FAIL("expected a load error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMeshLoadError);
    CHECK(std::string(e.what()).find("broken") != std::string::npos);
  }
  write_file(dir + "/dup.json",
             R"({"entries": [{"model_id": "box", "display_name": "Box", "mesh_path": "box.ply"},
                             {"model_id": "box", "display_name": "Box", "mesh_path": "box.ply"}]})");
  CHECK(code_of([&] { ModelLibrary::load(load_manifest(dir + "/dup.json"), 0); }) ==
        ErrorCode::kDuplicateModelId);

  write_file(dir + "/ok.json",
             R"({"entries": [{"model_id": "box", "display_name": "Box", "mesh_path": "box.ply", "sample_count": 64}]})");
  const ModelLibrary lib = ModelLibrary::load(load_manifest(dir + "/ok.json"), 0);
  REQUIRE(lib.size() == 1);
  const ModelEntry* box = lib.find("box");
  REQUIRE(box != nullptr);
  CHECK(box->sampled.size() == 64);
  CHECK(box->diameter == doctest::Approx(model_diameter(box->sampled)));
  CHECK(lib.find("nope") == nullptr);
  std::filesystem::remove_all(dir);
}

TEST_CASE("a model's samples do not depend on the other entries") {
  const TriangleMesh a = mesh::box({1, 2, 3});
  const TriangleMesh b = mesh::sphere(1.0);
  const auto one = ModelLibrary::from_meshes({{{"a", "A", "", 100}, a}}, 7);
  const auto two = ModelLibrary::from_meshes({{{"b", "B", "", 100}, b}, {{"a", "A", "", 100}, a}}, 7);
  CHECK(one.find("a")->sampled == two.find("a")->sampled);
  const auto other_seed = ModelLibrary::from_meshes({{{"a", "A", "", 100}, a}}, 8);
  CHECK_FALSE(one.find("a")->sampled == other_seed.find("a")->sampled);
}

TEST_CASE("fit_all ranks the true model first on a clean scene") {
  const testing::World w = testing::make_world();
  IcpParams icp;
  RestartParams rp;
  rp.restart_count = 4;
  for (const Anchor& a : w.anchors) {
    if (a.label == taskboard::kSymmetricObject) continue;
    const auto ranked = w.library->fit_all(w.scene->index, a.point, icp, rp);
    REQUIRE_FALSE(ranked.empty());
    CHECK(std::is_sorted(ranked.begin(), ranked.end(), ranked_before));
    CHECK(ranked.front().model_id == a.label);
  }
}

TEST_CASE("ranked_before breaks likelihood ties by model id") {
  RankedFit a{"a", {}};
  RankedFit b{"b", {}};
  a.fit.likelihood = b.fit.likelihood = 3.0;
  CHECK(ranked_before(a, b));
  CHECK_FALSE(ranked_before(b, a));
  b.fit.likelihood = 4.0;
  CHECK(ranked_before(b, a));
}
