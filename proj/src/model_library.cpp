// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include "atreg/model_library.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <set>

#include "json.hpp"

#include "atreg/error.hpp"
#include "atreg/ply.hpp"
#include "atreg/rng.hpp"

namespace atreg {

using nlohmann::json;

std::string LibraryManifest::resolve(const ManifestEntry& e) const {
  const std::filesystem::path p(e.mesh_path);
  if (p.is_absolute() || base_dir.empty()) {
    return p.string();
  }
  return (std::filesystem::path(base_dir) / p).string();
}

namespace {

[[noreturn]] void manifest_error(const std::string& what) {
  throw Error(ErrorCode::kManifestError, "manifest: " + what);
}

std::string required_string(const json& j, const char* key, std::size_t index) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    manifest_error("entry " + std::to_string(index) + " needs string field '" + key + "'");
  }
  return it->get<std::string>();
}

}  // namespace

LibraryManifest parse_manifest(std::string_view json_text, std::string base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    manifest_error(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array()) {
    manifest_error("expected an object with an 'entries' array");
  }
  LibraryManifest m;
  m.base_dir = std::move(base_dir);
  std::size_t i = 0;
  for (const json& e : doc["entries"]) {
    if (!e.is_object()) {
      manifest_error("entry " + std::to_string(i) + " is not an object");
    }
    ManifestEntry entry;
    entry.model_id = required_string(e, "model_id", i);
    if (entry.model_id.empty()) {
      manifest_error("entry " + std::to_string(i) + " has an empty model_id");
    }
    entry.display_name =
        e.contains("display_name") ? required_string(e, "display_name", i) : entry.model_id;
    entry.mesh_path = required_string(e, "mesh_path", i);
    if (e.contains("sample_count")) {
      const json& n = e["sample_count"];
      if (!n.is_number_unsigned() || n.get<std::uint64_t>() < 3) {
        manifest_error("entry " + std::to_string(i) + ": sample_count must be an integer >= 3");
      }
      entry.sample_count = n.get<std::size_t>();
    }
    m.entries.push_back(std::move(entry));
    ++i;
  }
  return m;
}

LibraryManifest load_manifest(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kManifestError, e.what());
  }
  return parse_manifest(text, std::filesystem::path(path).parent_path().string());
}

std::string write_manifest(const LibraryManifest& manifest) {
  json entries = json::array();
  for (const ManifestEntry& e : manifest.entries) {
    entries.push_back({{"model_id", e.model_id},
                       {"display_name", e.display_name},
                       {"mesh_path", e.mesh_path},
                       {"sample_count", e.sample_count}});
  }
  return json{{"entries", entries}}.dump(2) + "\n";
}

ModelLibrary ModelLibrary::from_meshes(
    std::vector<std::pair<ManifestEntry, TriangleMesh>> models, std::uint64_t seed) {
  std::set<std::string> seen;
  ModelLibrary lib;
  for (auto& [entry, mesh] : models) {
    if (!seen.insert(entry.model_id).second) {
      throw Error(ErrorCode::kDuplicateModelId, "duplicate model_id '" + entry.model_id + "'");
    }
    if (entry.sample_count < 3) {
      throw Error(ErrorCode::kInvalidArgument,
                  "model '" + entry.model_id + "': sample_count must be >= 3");
    }
    ModelEntry m;
    m.model_id = entry.model_id;
    m.display_name = entry.display_name;
    m.mesh = std::move(mesh);
    drop_invalid_faces(m.mesh);
    Rng rng(derive_seed(seed, hash_string(m.model_id)));
    try {
      m.sampled = sample_mesh(m.mesh, entry.sample_count, rng);
    } catch (const Error& e) {
      throw Error(ErrorCode::kMeshLoadError, "model '" + m.model_id + "': " + e.what());
    }
    m.center = centroid(m.sampled);
    m.diameter = model_diameter(m.sampled);
    if (!(m.diameter > 0.0)) {
      throw Error(ErrorCode::kMeshLoadError, "model '" + m.model_id + "' has zero diameter");
    }
    lib.entries_.push_back(std::move(m));
  }
  return lib;
}

ModelLibrary ModelLibrary::load(const LibraryManifest& manifest, std::uint64_t seed) {
  std::set<std::string> seen;
  std::vector<std::pair<ManifestEntry, TriangleMesh>> models;
  for (const ManifestEntry& e : manifest.entries) {
    if (!seen.insert(e.model_id).second) {
      throw Error(ErrorCode::kDuplicateModelId, "duplicate model_id '" + e.model_id + "'");
    }
    const std::string path = manifest.resolve(e);
    try {
      models.emplace_back(e, load_mesh(path));
    } catch (const Error& err) {
      throw Error(ErrorCode::kMeshLoadError,
                  "model '" + e.model_id + "' (" + path + "): " + err.what());
    }
  }
  return from_meshes(std::move(models), seed);
}

const ModelEntry* ModelLibrary::find(std::string_view model_id) const {
  for (const ModelEntry& e : entries_) {
    if (e.model_id == model_id) {
      return &e;
    }
  }
  return nullptr;
}

bool ranked_before(const RankedFit& a, const RankedFit& b) {
  if (a.fit.likelihood != b.fit.likelihood) {
    return a.fit.likelihood > b.fit.likelihood;
  }
  return a.model_id < b.model_id;
}

std::vector<RankedFit> ModelLibrary::fit_all(const SpatialIndex& scene, const Point3& anchor,
                                             const IcpParams& icp,
                                             const RestartParams& restarts,
                                             ComputePool* pool) const {
  restarts.validate();
  const std::size_t per_model = restarts.restart_count;
  std::vector<IcpParams> icps(entries_.size(), icp);
  std::vector<RestartParams> rps(entries_.size(), restarts);
  for (std::size_t m = 0; m < entries_.size(); ++m) {
    icps[m].rejection_radius = entries_[m].diameter;
    icps[m].validate();
    rps[m].translation_radius = entries_[m].diameter;
    rps[m].seed = derive_seed(restarts.seed, hash_string(entries_[m].model_id));
  }

  // One task per (model, restart) so the pool stays busy across models.
  std::vector<std::optional<FitResult>> slots(entries_.size() * per_model);
  auto run_one = [&](std::size_t task) {
    const std::size_t m = task / per_model;
    const std::size_t i = task % per_model;
    const ModelEntry& e = entries_[m];
    slots[task] = run_restart(e.sampled, scene, anchor, icps[m], rps[m], e.center, i);
  };
  if (pool != nullptr) {
    pool->parallel_for(slots.size(), run_one);
  } else {
    for (std::size_t t = 0; t < slots.size(); ++t) {
      run_one(t);
    }
  }

  std::vector<RankedFit> ranked;
  for (std::size_t m = 0; m < entries_.size(); ++m) {
    const FitResult* best = nullptr;
    for (std::size_t i = 0; i < per_model; ++i) {
      const auto& s = slots[m * per_model + i];
      if (s && (best == nullptr || fit_ranks_before(*s, *best))) {
        best = &*s;
      }
    }
    if (best != nullptr) {
      ranked.push_back({entries_[m].model_id, *best});
    }
  }
  std::sort(ranked.begin(), ranked.end(), ranked_before);
  return ranked;
}

}  // namespace atreg
