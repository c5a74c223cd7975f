// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

// PLY reader and writer (ascii and binary_little_endian).
//
// The reader accepts any element/property layout; it extracts x/y/z (and
// red/green/blue when present) from the "vertex" element and triangles from
// the "face" element. Polygons with more than three corners are fanned.

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "atreg/geom.hpp"

namespace atreg {

enum class PlyFormat { kAscii, kBinaryLittleEndian };

struct PlyData {
  PlyFormat format = PlyFormat::kAscii;
  PointCloud cloud;
  std::vector<Face> faces;
  bool has_face_element = false;
  /// Vertices discarded for non-finite coordinates.
  std::size_t dropped_vertices = 0;
  /// Faces discarded because they referenced a dropped vertex.
  std::size_t dropped_faces = 0;

  TriangleMesh mesh() const { return {cloud.points, faces}; }
};

/// Throws Error(kHeaderMalformed | kBodyTruncated | kBadFaceIndex).
PlyData parse_ply(std::string_view bytes);

/// Binary output stores coordinates as double and round-trips exactly.
/// Ascii output stores float32 values printed with 9 significant digits.
std::string write_ply(const PointCloud& cloud, PlyFormat format);
std::string write_ply(const TriangleMesh& mesh, PlyFormat format);

/// Parses the file and drops zero-area faces. Throws Error(kIoError) if the
/// file cannot be read, or a parse error.
TriangleMesh load_mesh(const std::string& path);
PointCloud load_cloud(const std::string& path);

std::string read_file(const std::string& path);
/// Throws Error(kIoError).
void write_file(const std::string& path, std::string_view contents);

}  // namespace atreg
