// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "atreg/compute_pool.hpp"
#include "atreg/geom.hpp"
#include "atreg/icp.hpp"
#include "atreg/restart_search.hpp"
#include "atreg/spatial_index.hpp"

namespace atreg {

inline constexpr std::size_t kDefaultSampleCount = 2048;

struct ManifestEntry {
  std::string model_id;
  std::string display_name;
  /// Absolute, or relative to the manifest's directory.
  std::string mesh_path;
  std::size_t sample_count = kDefaultSampleCount;
};

struct LibraryManifest {
  std::vector<ManifestEntry> entries;
  /// Directory that relative mesh paths resolve against.
  std::string base_dir;

  std::string resolve(const ManifestEntry& e) const;
};

/// {"entries": [{"model_id", "display_name", "mesh_path", "sample_count"?}]}
/// Throws Error(kManifestError).
LibraryManifest parse_manifest(std::string_view json_text, std::string base_dir);
LibraryManifest load_manifest(const std::string& path);
std::string write_manifest(const LibraryManifest& manifest);

struct ModelEntry {
  std::string model_id;
  std::string display_name;
  TriangleMesh mesh;
  PointCloud sampled;
  Point3 center;
  double diameter = 0.0;
};

class ModelLibrary {
 public:
  ModelLibrary() = default;

  /// Parses and samples every mesh. Model i is sampled from the stream
  /// derive_seed(seed, hash_string(model_id)), so adding or reordering entries
  /// does not change other models' samples.
  /// Throws Error(kMeshLoadError) naming the model, or Error(kDuplicateModelId).
  static ModelLibrary load(const LibraryManifest& manifest, std::uint64_t seed);

  /// Same, from meshes already in memory.
  static ModelLibrary from_meshes(std::vector<std::pair<ManifestEntry, TriangleMesh>> models,
                                  std::uint64_t seed);

  const std::vector<ModelEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  /// nullptr if absent.
  const ModelEntry* find(std::string_view model_id) const;

  /// Best-of-restarts fit of every model at `anchor`, sorted by likelihood
  /// descending, ties by model_id. Each model uses its own diameter as both
  /// rejection radius and restart translation radius (the corresponding
  /// fields of `icp` and `restarts` are ignored), and its own restart stream
  /// derive_seed(restarts.seed, hash_string(model_id)). Models whose restarts
  /// all fail are omitted.
  std::vector<RankedFit> fit_all(const SpatialIndex& scene, const Point3& anchor,
                                 const IcpParams& icp, const RestartParams& restarts,
                                 ComputePool* pool = nullptr) const;

 private:
  std::vector<ModelEntry> entries_;
};

/// fit_all's merge order: likelihood descending, then model_id ascending.
bool ranked_before(const RankedFit& a, const RankedFit& b);

}  // namespace atreg
