// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include "atreg/ply.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "atreg/error.hpp"

namespace atreg {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary PLY I/O assumes a little-endian host");

enum class Type { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

std::optional<Type> parse_type(std::string_view s) {
  if (s == "char" || s == "int8") return Type::kInt8;
  if (s == "uchar" || s == "uint8") return Type::kUInt8;
  if (s == "short" || s == "int16") return Type::kInt16;
  if (s == "ushort" || s == "uint16") return Type::kUInt16;
  if (s == "int" || s == "int32") return Type::kInt32;
  if (s == "uint" || s == "uint32") return Type::kUInt32;
  if (s == "float" || s == "float32") return Type::kFloat32;
  if (s == "double" || s == "float64") return Type::kFloat64;
  return std::nullopt;
}

std::size_t type_size(Type t) {
  switch (t) {
    case Type::kInt8:
    case Type::kUInt8: return 1;
    case Type::kInt16:
    case Type::kUInt16: return 2;
    case Type::kInt32:
    case Type::kUInt32:
    case Type::kFloat32: return 4;
    case Type::kFloat64: return 8;
  }
  return 1;
}

bool is_integer(Type t) { return t != Type::kFloat32 && t != Type::kFloat64; }

struct Property {
  std::string name;
  Type type = Type::kFloat32;
  bool is_list = false;
  Type count_type = Type::kUInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

[[noreturn]] void header_error(const std::string& what) {
  throw Error(ErrorCode::kHeaderMalformed, "PLY header: " + what);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

struct Header {
  PlyFormat format = PlyFormat::kAscii;
  std::vector<Element> elements;
  std::size_t body_offset = 0;
};

Header parse_header(std::string_view bytes) {
  Header h;
  std::size_t pos = 0;
  bool have_format = false;
  bool first = true;
  while (true) {
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) {
      header_error("missing end_header");
    }
    std::string_view line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (first) {
      if (line != "ply") header_error("missing 'ply' magic");
      first = false;
      continue;
    }
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "format") {
      if (tok.size() != 3 || have_format) header_error("bad format line");
      if (tok[1] == "ascii") {
        h.format = PlyFormat::kAscii;
      } else if (tok[1] == "binary_little_endian") {
        h.format = PlyFormat::kBinaryLittleEndian;
      } else {
        header_error("unsupported format '" + std::string(tok[1]) + "'");
      }
      have_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) header_error("bad element line");
      Element e;
      e.name = std::string(tok[1]);
      unsigned long long count = 0;
      const auto r = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), count);
      if (r.ec != std::errc() || r.ptr != tok[2].data() + tok[2].size()) {
        header_error("bad element count '" + std::string(tok[2]) + "'");
      }
      if (count > std::numeric_limits<std::uint32_t>::max()) {
        header_error("element count too large");
      }
      e.count = static_cast<std::size_t>(count);
      h.elements.push_back(std::move(e));
    } else if (tok[0] == "property") {
      if (h.elements.empty()) header_error("property before element");
      Property p;
      if (tok.size() == 5 && tok[1] == "list") {
        const auto ct = parse_type(tok[2]);
        const auto it = parse_type(tok[3]);
        if (!ct || !it || !is_integer(*ct)) header_error("bad list property");
        p.is_list = true;
        p.count_type = *ct;
        p.type = *it;
        p.name = std::string(tok[4]);
      } else if (tok.size() == 3) {
        const auto t = parse_type(tok[1]);
        if (!t) header_error("unknown property type '" + std::string(tok[1]) + "'");
        p.type = *t;
        p.name = std::string(tok[2]);
      } else {
        header_error("bad property line");
      }
      h.elements.back().properties.push_back(std::move(p));
    } else {
      header_error("unknown keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!have_format) header_error("missing format line");
  h.body_offset = pos;
  return h;
}

/// Sequential value source over the body.
class BodyReader {
 public:
  BodyReader(std::string_view body, PlyFormat format) : body_(body), format_(format) {}

  double read(Type t) {
    return format_ == PlyFormat::kAscii ? read_ascii(t) : read_binary(t);
  }

  std::size_t remaining() const { return body_.size() - pos_; }

 private:
  [[noreturn]] static void truncated() {
    throw Error(ErrorCode::kBodyTruncated, "PLY body ends before the declared element counts");
  }

  double read_binary(Type t) {
    const std::size_t n = type_size(t);
    if (remaining() < n) truncated();
    const char* p = body_.data() + pos_;
    pos_ += n;
    switch (t) {
      case Type::kInt8: return static_cast<double>(load<std::int8_t>(p));
      case Type::kUInt8: return static_cast<double>(load<std::uint8_t>(p));
      case Type::kInt16: return static_cast<double>(load<std::int16_t>(p));
      case Type::kUInt16: return static_cast<double>(load<std::uint16_t>(p));
      case Type::kInt32: return static_cast<double>(load<std::int32_t>(p));
      case Type::kUInt32: return static_cast<double>(load<std::uint32_t>(p));
      case Type::kFloat32: return static_cast<double>(load<float>(p));
      case Type::kFloat64: return load<double>(p);
    }
    return 0.0;
  }

  template <typename T>
  static T load(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof v);
    return v;
  }

  std::string_view next_token() {
    while (pos_ < body_.size() && is_space(body_[pos_])) ++pos_;
    if (pos_ == body_.size()) truncated();
    const std::size_t start = pos_;
    while (pos_ < body_.size() && !is_space(body_[pos_])) ++pos_;
    return body_.substr(start, pos_ - start);
  }

  static bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  }

  double read_ascii(Type t) {
    const std::string_view tok = next_token();
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (t == Type::kFloat32) {
      float v = 0.0f;
      const auto r = std::from_chars(first, last, v);
      if (r.ec == std::errc() && r.ptr == last) return static_cast<double>(v);
      return parse_special(tok);
    }
    if (t == Type::kFloat64) {
      double v = 0.0;
      const auto r = std::from_chars(first, last, v);
      if (r.ec == std::errc() && r.ptr == last) return v;
      return parse_special(tok);
    }
    long long v = 0;
    const auto r = std::from_chars(first, last, v);
    if (r.ec != std::errc() || r.ptr != last) {
      malformed(tok);
    }
    return static_cast<double>(v);
  }

  // nan / inf spellings and out-of-range literals; the caller filters them.
  static double parse_special(std::string_view tok) {
    std::string s(tok);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) malformed(tok);
    return v;
  }

  [[noreturn]] static void malformed(std::string_view tok) {
    throw Error(ErrorCode::kBodyMalformed,
                "PLY body: cannot parse '" + std::string(tok.substr(0, 32)) + "'");
  }

  std::string_view body_;
  PlyFormat format_;
  std::size_t pos_ = 0;
};

int find_property(const Element& e, std::string_view name) {
  for (std::size_t i = 0; i < e.properties.size(); ++i) {
    if (e.properties[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::uint8_t to_channel(double v) {
  if (!(v >= 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(v);
}

}  // namespace

PlyData parse_ply(std::string_view bytes) {
  const Header h = parse_header(bytes);
  BodyReader reader(bytes.substr(h.body_offset), h.format);

  PlyData out;
  out.format = h.format;
  const Element* vertex = nullptr;
  std::size_t ordinal = 0;
  std::size_t vertex_ordinal = 0;
  for (const Element& e : h.elements) {
    if (e.name == "vertex") {
      if (vertex != nullptr) header_error("duplicate vertex element");
      vertex = &e;
      vertex_ordinal = ordinal;
    }
    if (e.name == "face") {
      if (out.has_face_element) header_error("duplicate face element");
      out.has_face_element = true;
    }
    ++ordinal;
  }
  int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
  if (vertex != nullptr) {
    ix = find_property(*vertex, "x");
    iy = find_property(*vertex, "y");
    iz = find_property(*vertex, "z");
    if (ix < 0 || iy < 0 || iz < 0) header_error("vertex element lacks x/y/z");
    for (int i : {ix, iy, iz}) {
      if (vertex->properties[static_cast<std::size_t>(i)].is_list) {
        header_error("vertex coordinate declared as list");
      }
    }
    ir = find_property(*vertex, "red");
    ig = find_property(*vertex, "green");
    ib = find_property(*vertex, "blue");
    const bool any = ir >= 0 || ig >= 0 || ib >= 0;
    const bool all = ir >= 0 && ig >= 0 && ib >= 0;
    if (any && !all) header_error("partial vertex colour");
    for (int i : {ir, ig, ib}) {
      if (i >= 0 && vertex->properties[static_cast<std::size_t>(i)].is_list) {
        header_error("vertex colour declared as list");
      }
    }
  } else if (out.has_face_element) {
    header_error("face element without vertex element");
  }
  const std::size_t vertex_count = vertex != nullptr ? vertex->count : 0;
  const bool colored = ir >= 0;

  // A scalar property costs at least one byte in either encoding, so a count
  // that exceeds the body size is truncated before any allocation.
  for (const Element& e : h.elements) {
    if (!e.properties.empty() && e.count > reader.remaining()) {
      throw Error(ErrorCode::kBodyTruncated,
                  "PLY element '" + e.name + "' declares more entries than the body holds");
    }
  }

  std::vector<std::uint8_t> keep;
  std::vector<std::array<double, 3>> raw_faces;
  std::vector<double> values;
  ordinal = 0;
  for (const Element& e : h.elements) {
    const bool is_vertex = ordinal == vertex_ordinal && vertex != nullptr;
    const bool is_face = e.name == "face";
    int face_list = -1;
    if (is_face) {
      face_list = find_property(e, "vertex_indices");
      if (face_list < 0) face_list = find_property(e, "vertex_index");
      if (face_list < 0 || !e.properties[static_cast<std::size_t>(face_list)].is_list) {
        header_error("face element lacks a vertex_indices list");
      }
    }
    if (is_vertex) {
      out.cloud.points.reserve(e.count);
      if (colored) out.cloud.colors.reserve(e.count);
      keep.reserve(e.count);
    }
    values.resize(e.properties.size());
    for (std::size_t row = 0; row < e.count; ++row) {
      for (std::size_t k = 0; k < e.properties.size(); ++k) {
        const Property& p = e.properties[k];
        if (!p.is_list) {
          values[k] = reader.read(p.type);
          continue;
        }
        const double count_value = reader.read(p.count_type);
        if (!(count_value >= 0.0)) {
          throw Error(ErrorCode::kBodyMalformed, "PLY list with negative length");
        }
        const auto count = static_cast<std::size_t>(count_value);
        if (count > reader.remaining()) {
          throw Error(ErrorCode::kBodyTruncated, "PLY list runs past the end of the body");
        }
        if (is_face && static_cast<int>(k) == face_list) {
          if (count < 3) {
            throw Error(ErrorCode::kBadFaceIndex,
                        "face " + std::to_string(row) + " has fewer than 3 corners");
          }
          std::array<double, 3> tri{};
          for (std::size_t c = 0; c < count; ++c) {
            const double idx = reader.read(p.type);
            if (!(idx >= 0.0) || idx >= static_cast<double>(vertex_count) ||
                idx != std::floor(idx)) {
              throw Error(ErrorCode::kBadFaceIndex,
                          "face " + std::to_string(row) + " references vertex " +
                              std::to_string(idx) + " of " + std::to_string(vertex_count));
            }
            if (c < 2) {
              tri[c] = idx;
            } else {
              tri[2] = idx;
              raw_faces.push_back(tri);
              tri[1] = idx;
            }
          }
        } else {
          for (std::size_t c = 0; c < count; ++c) reader.read(p.type);
        }
      }
      if (is_vertex) {
        const Point3 pt{values[static_cast<std::size_t>(ix)], values[static_cast<std::size_t>(iy)],
                        values[static_cast<std::size_t>(iz)]};
        const bool ok = pt.finite();
        keep.push_back(ok ? 1 : 0);
        if (!ok) {
          ++out.dropped_vertices;
          continue;
        }
        out.cloud.points.push_back(pt);
        if (colored) {
          out.cloud.colors.push_back({to_channel(values[static_cast<std::size_t>(ir)]),
                                      to_channel(values[static_cast<std::size_t>(ig)]),
                                      to_channel(values[static_cast<std::size_t>(ib)])});
        }
      }
    }
    ++ordinal;
  }

  std::vector<std::uint32_t> remap(keep.size());
  std::uint32_t next = 0;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    remap[i] = keep[i] ? next++ : std::numeric_limits<std::uint32_t>::max();
  }
  out.faces.reserve(raw_faces.size());
  for (const auto& f : raw_faces) {
    Face face{};
    bool ok = true;
    for (int c = 0; c < 3; ++c) {
      const std::uint32_t m = remap[static_cast<std::size_t>(f[static_cast<std::size_t>(c)])];
      ok = ok && m != std::numeric_limits<std::uint32_t>::max();
      face[static_cast<std::size_t>(c)] = m;
    }
    if (ok) {
      out.faces.push_back(face);
    } else {
      ++out.dropped_faces;
    }
  }
  return out;
}

namespace {

std::string header(PlyFormat format, std::size_t vertices, bool colors, std::size_t faces,
                   bool with_faces) {
  std::ostringstream h;
  h << "ply\n"
    << (format == PlyFormat::kAscii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n")
    << "comment atreg\n"
    << "element vertex " << vertices << "\n";
  const char* type = format == PlyFormat::kAscii ? "float" : "double";
  h << "property " << type << " x\nproperty " << type << " y\nproperty " << type << " z\n";
  if (colors) {
    h << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  }
  if (with_faces) {
    h << "element face " << faces << "\nproperty list uchar uint vertex_indices\n";
  }
  h << "end_header\n";
  return h.str();
}

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof v];
  std::memcpy(buf, &v, sizeof v);
  out.append(buf, sizeof v);
}

void append_float(std::string& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(static_cast<float>(v)));
  out.append(buf, static_cast<std::size_t>(n));
}

std::string write_impl(const std::vector<Point3>& points, const std::vector<Color>& colors,
                       const std::vector<Face>* faces, PlyFormat format) {
  const bool colored = !colors.empty();
  if (colored && colors.size() != points.size()) {
    throw Error(ErrorCode::kInvalidArgument, "colour count does not match point count");
  }
  std::string out =
      header(format, points.size(), colored, faces ? faces->size() : 0, faces != nullptr);
  if (format == PlyFormat::kBinaryLittleEndian) {
    out.reserve(out.size() + points.size() * (colored ? 27 : 24) +
                (faces ? faces->size() * 13 : 0));
    for (std::size_t i = 0; i < points.size(); ++i) {
      put(out, points[i].x);
      put(out, points[i].y);
      put(out, points[i].z);
      if (colored) {
        put(out, colors[i].r);
        put(out, colors[i].g);
        put(out, colors[i].b);
      }
    }
    if (faces) {
      for (const Face& f : *faces) {
        put(out, std::uint8_t{3});
        put(out, f[0]);
        put(out, f[1]);
        put(out, f[2]);
      }
    }
    return out;
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    append_float(out, points[i].x);
    out += ' ';
    append_float(out, points[i].y);
    out += ' ';
    append_float(out, points[i].z);
    if (colored) {
      out += ' ' + std::to_string(colors[i].r) + ' ' + std::to_string(colors[i].g) + ' ' +
             std::to_string(colors[i].b);
    }
    out += '\n';
  }
  if (faces) {
    for (const Face& f : *faces) {
      out += "3 " + std::to_string(f[0]) + ' ' + std::to_string(f[1]) + ' ' +
             std::to_string(f[2]) + '\n';
    }
  }
  return out;
}

}  // namespace

std::string write_ply(const PointCloud& cloud, PlyFormat format) {
  return write_impl(cloud.points, cloud.colors, nullptr, format);
}

std::string write_ply(const TriangleMesh& mesh, PlyFormat format) {
  for (const Face& f : mesh.faces) {
    for (std::uint32_t idx : f) {
      if (idx >= mesh.vertices.size()) {
        throw Error(ErrorCode::kBadFaceIndex, "mesh face index out of range");
      }
    }
  }
  return write_impl(mesh.vertices, {}, &mesh.faces, format);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) {
    throw Error(ErrorCode::kIoError, "read failed for '" + path + "'");
  }
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIoError, "cannot create '" + path + "'");
  }
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) {
    throw Error(ErrorCode::kIoError, "write failed for '" + path + "'");
  }
}

TriangleMesh load_mesh(const std::string& path) {
  TriangleMesh mesh = parse_ply(read_file(path)).mesh();
  drop_invalid_faces(mesh);
  return mesh;
}

PointCloud load_cloud(const std::string& path) { return parse_ply(read_file(path)).cloud; }

}  // namespace atreg
