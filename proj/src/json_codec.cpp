// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include "atreg/json_codec.hpp"

#include <cmath>
#include <cstdio>

#include "atreg/error.hpp"

namespace atreg {
namespace {

constexpr std::string_view kFormatName = "atreg-session";
constexpr int kFormatVersion = 1;

void dump_number(const Json& v, std::string& out) {
  if (v.is_number_unsigned()) {
    out += std::to_string(v.get<std::uint64_t>());
  } else if (v.is_number_integer()) {
    out += std::to_string(v.get<std::int64_t>());
  } else {
    // -0.0 prints as "-0", which parses back as the integer 0.
    const double d = v.get<double>() + 0.0;
    if (!std::isfinite(d)) {
      out += "null";
      return;
    }
    char buf[40];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", d);
    out.append(buf, static_cast<std::size_t>(n));
  }
}

void newline(std::string& out, int indent, int depth) {
  if (indent >= 0) {
    out += '\n';
    out.append(static_cast<std::size_t>(indent * depth), ' ');
  }
}

void dump_value(const Json& v, std::string& out, int indent, int depth) {
  switch (v.type()) {
    case Json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(out, indent, depth + 1);
        out += Json(it.key()).dump();
        out += indent >= 0 ? ": " : ":";
        dump_value(it.value(), out, indent, depth + 1);
      }
      newline(out, indent, depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const Json& e : v) flat = flat && !e.is_structured();
      out += '[';
      bool first = true;
      for (const Json& e : v) {
        if (!first) out += flat && indent >= 0 ? ", " : ",";
        first = false;
        if (!flat) newline(out, indent, depth + 1);
        dump_value(e, out, indent, depth + 1);
      }
      if (!flat) newline(out, indent, depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float:
    case Json::value_t::number_integer:
    case Json::value_t::number_unsigned:
      dump_number(v, out);
      return;
    default:
      out += v.dump();
      return;
  }
}

[[noreturn]] void shape_error(std::string_view what, std::string_view expected) {
  throw Error(ErrorCode::kInvalidArgument,
              std::string(what) + ": expected " + std::string(expected));
}

const Json& field(const Json& j, const char* key, std::string_view what) {
  if (!j.is_object()) shape_error(what, "an object");
  const auto it = j.find(key);
  if (it == j.end()) shape_error(what, std::string("field '") + key + "'");
  return *it;
}

double real(const Json& j, std::string_view what) {
  if (!j.is_number()) shape_error(what, "a number");
  return j.get<double>();
}

std::size_t count(const Json& j, std::string_view what) {
  if (!j.is_number_unsigned()) shape_error(what, "a non-negative integer");
  return j.get<std::size_t>();
}

bool flag(const Json& j, std::string_view what) {
  if (!j.is_boolean()) shape_error(what, "a boolean");
  return j.get<bool>();
}

std::string text(const Json& j, std::string_view what) {
  if (!j.is_string()) shape_error(what, "a string");
  return j.get<std::string>();
}

std::array<double, 4> four(const Json& j, std::string_view what) {
  if (!j.is_array() || j.size() != 4) shape_error(what, "an array of 4 numbers");
  return {real(j[0], what), real(j[1], what), real(j[2], what), real(j[3], what)};
}

}  // namespace

std::string canonical_dump(const Json& value, int indent) {
  std::string out;
  dump_value(value, out, indent, 0);
  if (indent >= 0) out += '\n';
  return out;
}

Json encode(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

Json encode(const UnitQuaternion& q) { return Json::array({q.w(), q.x(), q.y(), q.z()}); }

Json encode(const RigidTransform& t) {
  return {{"rotation", encode(t.rotation)}, {"translation", encode(t.translation)}};
}

Json encode(const FitResult& f) {
  return {{"pose", encode(f.transform)},
          {"weighted_residual", f.weighted_residual},
          {"likelihood", f.likelihood},
          {"iterations", f.iterations},
          {"converged", f.converged},
          {"restart_index", f.restart_index},
          {"degenerate_iterations", f.degenerate_iterations}};
}

Json encode(const RankedFit& r) { return {{"model_id", r.model_id}, {"fit", encode(r.fit)}}; }

Json encode(const CorrectionRecord& c) {
  return {{"delta_translation", encode(c.delta_translation)},
          {"delta_rotation", encode(c.delta_rotation)},
          {"camera_orientation", encode(c.camera_orientation)},
          {"world_delta_translation", encode(c.world_delta_translation)},
          {"world_delta_rotation", encode(c.world_delta_rotation)},
          {"resulting_fit", encode(c.resulting_fit)}};
}

Json encode(const ObjectSlot& s, bool include_timing) {
  Json ranked = Json::array();
  for (const RankedFit& r : s.ranked) ranked.push_back(encode(r));
  Json history = Json::array();
  for (const CorrectionRecord& c : s.history) history.push_back(encode(c));
  Json metrics = {{"model_changes", s.metrics.model_changes},
                  {"corrections", s.metrics.corrections}};
  if (include_timing) metrics["fit_time"] = s.metrics.fit_time;
  const RankedFit* active = s.active();
  return {{"slot_id", s.slot_id},
          {"anchor", encode(s.anchor)},
          {"state", active ? "fitted" : "unfit"},
          {"model_id", active ? Json(active->model_id) : Json(nullptr)},
          {"pose", active ? encode(s.active_pose) : Json(nullptr)},
          {"active_index", s.active_index},
          {"ranked", ranked},
          {"history", history},
          {"accepted", s.accepted},
          {"metrics", metrics}};
}

Vec3 decode_vec3(const Json& j, std::string_view what) {
  if (!j.is_array() || j.size() != 3) shape_error(what, "an array of 3 numbers");
  const Vec3 v{real(j[0], what), real(j[1], what), real(j[2], what)};
  if (!v.finite()) shape_error(what, "finite components");
  return v;
}

UnitQuaternion decode_quaternion(const Json& j, std::string_view what, double tolerance) {
  const auto q = four(j, what);
  const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  if (!std::isfinite(n) || !(std::abs(n - 1.0) <= tolerance)) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(what) + ": quaternion is not unit length (norm " + std::to_string(n) +
                    ")");
  }
  return {q[0], q[1], q[2], q[3]};
}

UnitQuaternion decode_stored_quaternion(const Json& j, std::string_view what) {
  const auto q = four(j, what);
  try {
    return UnitQuaternion::from_stored(q[0], q[1], q[2], q[3]);
  } catch (const Error&) {
    shape_error(what, "a unit quaternion");
  }
}

RigidTransform decode_transform(const Json& j, std::string_view what) {
  return {decode_stored_quaternion(field(j, "rotation", what), what),
          decode_vec3(field(j, "translation", what), what)};
}

FitResult decode_fit(const Json& j, std::string_view what) {
  FitResult f;
  f.transform = decode_transform(field(j, "pose", what), what);
  f.weighted_residual = real(field(j, "weighted_residual", what), what);
  f.likelihood = real(field(j, "likelihood", what), what);
  f.iterations = count(field(j, "iterations", what), what);
  f.converged = flag(field(j, "converged", what), what);
  f.restart_index = count(field(j, "restart_index", what), what);
  f.degenerate_iterations = count(field(j, "degenerate_iterations", what), what);
  return f;
}

ObjectSlot decode_slot(const Json& j) {
  ObjectSlot s;
  s.slot_id = text(field(j, "slot_id", "slot"), "slot_id");
  const std::string what = "slot " + s.slot_id;
  s.anchor = decode_vec3(field(j, "anchor", what), what + " anchor");
  for (const Json& r : field(j, "ranked", what)) {
    s.ranked.push_back({text(field(r, "model_id", what), what + " model_id"),
                        decode_fit(field(r, "fit", what), what + " ranked fit")});
  }
  s.active_index = count(field(j, "active_index", what), what + " active_index");
  if (!s.ranked.empty()) {
    if (s.active_index >= s.ranked.size()) shape_error(what, "active_index < ranked length");
    s.active_pose = decode_transform(field(j, "pose", what), what + " pose");
  }
  for (const Json& c : field(j, "history", what)) {
    CorrectionRecord rec;
    rec.delta_translation = decode_vec3(field(c, "delta_translation", what), what);
    rec.delta_rotation = decode_stored_quaternion(field(c, "delta_rotation", what), what);
    rec.camera_orientation = decode_stored_quaternion(field(c, "camera_orientation", what), what);
    rec.world_delta_translation = decode_vec3(field(c, "world_delta_translation", what), what);
    rec.world_delta_rotation =
        decode_stored_quaternion(field(c, "world_delta_rotation", what), what);
    rec.resulting_fit = decode_fit(field(c, "resulting_fit", what), what);
    s.history.push_back(rec);
  }
  s.accepted = flag(field(j, "accepted", what), what + " accepted");
  const Json& m = field(j, "metrics", what);
  s.metrics.model_changes = count(field(m, "model_changes", what), what);
  s.metrics.corrections = count(field(m, "corrections", what), what);
  if (m.contains("fit_time")) s.metrics.fit_time = real(m["fit_time"], what);
  return s;
}

std::string export_session(const SessionSnapshot& snapshot, ExportOptions options) {
  Json slots = Json::array();
  for (const ObjectSlot& s : snapshot.slots) slots.push_back(encode(s, options.include_timing));
  const Json doc = {{"format", kFormatName},
                    {"version", kFormatVersion},
                    {"scene_id", snapshot.scene_id},
                    {"next_slot", snapshot.next_slot},
                    {"slots", slots}};
  return canonical_dump(doc, 2);
}

SessionSnapshot import_session(std::string_view text_in) {
  try {
    const Json doc = Json::parse(text_in);
    if (text(field(doc, "format", "session"), "format") != kFormatName) {
      shape_error("format", kFormatName);
    }
    const Json& v = field(doc, "version", "session");
    if (!v.is_number_integer() || v.get<int>() != kFormatVersion) {
      shape_error("version", std::to_string(kFormatVersion));
    }
    SessionSnapshot s;
    s.scene_id = text(field(doc, "scene_id", "session"), "scene_id");
    s.next_slot = count(field(doc, "next_slot", "session"), "next_slot");
    const Json& slots = field(doc, "slots", "session");
    if (!slots.is_array()) shape_error("slots", "an array");
    for (const Json& j : slots) s.slots.push_back(decode_slot(j));
    return s;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSessionFormatError, std::string("session document: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::kSessionFormatError, std::string("session document: ") + e.what());
  }
}

}  // namespace atreg
