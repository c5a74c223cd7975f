// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include "atreg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "atreg/error.hpp"

namespace atreg {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

[[noreturn]] void bad(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, what);
}

Json parse_object(std::string_view text, const char* what) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    bad(std::string(what) + ": " + e.what());
  }
  if (!j.is_object()) bad(std::string(what) + ": expected an object");
  return j;
}

std::string text_field(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_string()) {
    bad(what + ": needs string '" + key + "'");
  }
  return j[key].get<std::string>();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v + 0.0);
  return buf;
}

}  // namespace

void OracleConfig::validate() const {
  if (!(rotation_threshold_deg > 0.0) || !(translation_threshold > 0.0)) {
    bad("oracle thresholds must be > 0");
  }
  if (!(correction_fraction > 0.0) || !(correction_fraction <= 1.0)) {
    bad("correction_fraction must be in (0, 1]");
  }
  if (!(max_rotation_step_deg > 0.0) || !(max_translation_step > 0.0)) {
    bad("oracle step caps must be > 0");
  }
}

const OracleObject* OracleConfig::find(std::string_view label) const {
  for (const OracleObject& o : objects) {
    if (o.label == label) return &o;
  }
  return nullptr;
}

OracleConfig parse_oracle(std::string_view json_text) {
  const Json j = parse_object(json_text, "oracle");
  OracleConfig c;
  if (!j.contains("objects") || !j["objects"].is_array()) bad("oracle: needs 'objects' array");
  for (const Json& o : j["objects"]) {
    OracleObject obj;
    obj.label = text_field(o, "label", "oracle object");
    obj.model_id = o.contains("model_id") ? text_field(o, "model_id", "oracle object") : obj.label;
    if (!o.contains("pose")) bad("oracle object " + obj.label + ": needs 'pose'");
    obj.pose = decode_transform(o["pose"], "oracle pose of " + obj.label);
    if (c.find(obj.label) != nullptr) bad("oracle: duplicate label '" + obj.label + "'");
    c.objects.push_back(std::move(obj));
  }
  auto real = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) bad(std::string("oracle: '") + key + "' must be a number");
    out = j[key].get<double>();
  };
  real("rotation_threshold_deg", c.rotation_threshold_deg);
  real("translation_threshold", c.translation_threshold);
  real("correction_fraction", c.correction_fraction);
  real("max_rotation_step_deg", c.max_rotation_step_deg);
  real("max_translation_step", c.max_translation_step);
  if (j.contains("max_corrections")) {
    if (!j["max_corrections"].is_number_unsigned()) bad("oracle: 'max_corrections' must be a count");
    c.max_corrections = j["max_corrections"].get<std::size_t>();
  }
  if (j.contains("camera_orientation")) {
    c.camera_orientation = decode_quaternion(j["camera_orientation"], "camera_orientation");
  }
  c.validate();
  return c;
}

std::vector<Anchor> parse_anchors(std::string_view json_text) {
  const Json j = parse_object(json_text, "anchors");
  if (!j.contains("anchors") || !j["anchors"].is_array()) bad("anchors: needs 'anchors' array");
  std::vector<Anchor> out;
  for (const Json& a : j["anchors"]) {
    Anchor anchor;
    anchor.label = text_field(a, "label", "anchor");
    if (!a.contains("point")) bad("anchor " + anchor.label + ": needs 'point'");
    anchor.point = decode_vec3(a["point"], "anchor " + anchor.label);
    out.push_back(std::move(anchor));
  }
  return out;
}

PoseError pose_error(const RigidTransform& estimate, const RigidTransform& truth,
                     const Point3& model_center) {
  return {rotation_distance(estimate.rotation, truth.rotation) / kDeg,
          (estimate.apply(model_center) - truth.apply(model_center)).norm()};
}

WorldDelta oracle_step(const RigidTransform& estimate, const RigidTransform& truth,
                       const ModelEntry& model, const OracleConfig& config) {
  WorldDelta step;
  const UnitQuaternion remaining = truth.rotation * estimate.rotation.inverse();
  const double angle = remaining.angle();
  if (angle > 0.0) {
    const double turn =
        std::min(config.correction_fraction * angle, config.max_rotation_step_deg * kDeg);
    step.rotation = UnitQuaternion::from_axis_angle(remaining.axis(), turn);
  }
  const Vec3 offset = truth.apply(model.center) - estimate.apply(model.center);
  const double cap = config.max_translation_step * model.diameter;
  Vec3 move = offset * config.correction_fraction;
  if (move.norm() > cap) move = move * (cap / move.norm());
  step.translation = move;
  return step;
}

std::size_t SimulationReport::successes() const {
  return static_cast<std::size_t>(
      std::count_if(objects.begin(), objects.end(), [](const ObjectOutcome& o) { return o.success; }));
}

std::size_t SimulationReport::rank1_correct() const {
  return static_cast<std::size_t>(std::count_if(
      objects.begin(), objects.end(), [](const ObjectOutcome& o) { return o.truth_rank == 1; }));
}

double SimulationReport::mean_fit_time() const {
  if (objects.empty()) return 0.0;
  double s = 0.0;
  for (const ObjectOutcome& o : objects) s += o.fit_time;
  return s / static_cast<double>(objects.size());
}

double SimulationReport::mean_model_changes() const {
  if (objects.empty()) return 0.0;
  double s = 0.0;
  for (const ObjectOutcome& o : objects) s += static_cast<double>(o.model_changes);
  return s / static_cast<double>(objects.size());
}

double SimulationReport::mean_corrections() const {
  if (objects.empty()) return 0.0;
  double s = 0.0;
  for (const ObjectOutcome& o : objects) s += static_cast<double>(o.corrections);
  return s / static_cast<double>(objects.size());
}

std::string SimulationReport::csv(bool include_timing) const {
  std::string out = "label,model_id,slot_id,truth_rank,final_model_id,success,failure,";
  if (include_timing) out += "fit_time,";
  out += "model_changes,corrections,rotation_error_deg,translation_error\n";
  for (const ObjectOutcome& o : objects) {
    out += o.label + "," + o.model_id + "," + o.slot_id + "," + std::to_string(o.truth_rank) +
           "," + o.final_model_id + "," + (o.success ? "1" : "0") + "," + o.failure + ",";
    if (include_timing) out += fmt(o.fit_time) + ",";
    out += std::to_string(o.model_changes) + "," + std::to_string(o.corrections) + "," +
           fmt(o.error.rotation_deg) + "," + fmt(o.error.translation) + "\n";
  }
  return out;
}

Json SimulationReport::summary(bool include_timing) const {
  Json rows = Json::array();
  for (const ObjectOutcome& o : objects) {
    Json row = {{"label", o.label},
                {"model_id", o.model_id},
                {"slot_id", o.slot_id},
                {"truth_rank", o.truth_rank},
                {"final_model_id", o.final_model_id},
                {"success", o.success},
                {"failure", o.failure},
                {"model_changes", o.model_changes},
                {"corrections", o.corrections},
                {"rotation_error_deg", o.error.rotation_deg},
                {"translation_error", o.error.translation}};
    if (include_timing) row["fit_time"] = o.fit_time;
    rows.push_back(row);
  }
  Json aggregate = {{"objects", objects.size()},
                    {"successes", successes()},
                    {"failures", objects.size() - successes()},
                    {"rank1_correct", rank1_correct()},
                    {"mean_model_changes", mean_model_changes()},
                    {"mean_corrections", mean_corrections()}};
  if (include_timing) aggregate["mean_fit_time"] = mean_fit_time();
  return {{"objects", rows}, {"aggregate", aggregate}};
}

SimulationReport simulate(Session& session, const ModelLibrary& library,
                          const OracleConfig& oracle, const std::vector<Anchor>& anchors) {
  oracle.validate();
  for (const Anchor& a : anchors) {
    if (oracle.find(a.label) == nullptr) {
      bad("no ground truth for anchor '" + a.label + "'");
    }
  }
  SimulationReport report;
  for (const Anchor& a : anchors) {
    const OracleObject& truth = *oracle.find(a.label);
    ObjectOutcome out;
    out.label = a.label;
    out.model_id = truth.model_id;

    ObjectSlot slot;
    try {
      slot = session.select_point(a.point);
    } catch (const NoFitFound& e) {
      slot = session.slot(e.slot_id());
    }
    out.slot_id = slot.slot_id;
    out.fit_time = slot.metrics.fit_time;
    for (std::size_t i = 0; i < slot.ranked.size(); ++i) {
      if (slot.ranked[i].model_id == truth.model_id) {
        out.truth_rank = i + 1;
        break;
      }
    }

    const ModelEntry* model = library.find(truth.model_id);
    if (!slot.has_fit()) {
      out.failure = "no_fit";
    } else if (out.truth_rank == 0 || model == nullptr) {
      out.failure = "model_not_ranked";
    } else {
      while (slot.active()->model_id != truth.model_id) {
        slot = session.cycle_model(slot.slot_id);
      }
      const double tolerance = oracle.translation_threshold * model->diameter;
      auto good = [&](const PoseError& e) {
        return e.rotation_deg <= oracle.rotation_threshold_deg && e.translation <= tolerance;
      };
      out.error = pose_error(slot.active_pose, truth.pose, model->center);
      while (!good(out.error) && slot.metrics.corrections < oracle.max_corrections) {
        const WorldDelta world = oracle_step(slot.active_pose, truth.pose, *model, oracle);
        const UnitQuaternion& cam = oracle.camera_orientation;
        slot = session.apply_correction(slot.slot_id, cam.inverse().rotate(world.translation),
                                        cam.inverse() * world.rotation * cam, cam);
        out.error = pose_error(slot.active_pose, truth.pose, model->center);
      }
      if (good(out.error)) {
        slot = session.accept_fit(slot.slot_id);
        out.success = true;
      } else {
        out.failure = "oracle_exhausted";
      }
    }
    out.final_model_id = slot.has_fit() ? slot.active()->model_id : "";
    out.model_changes = slot.metrics.model_changes;
    out.corrections = slot.metrics.corrections;
    report.objects.push_back(std::move(out));
  }
  return report;
}

}  // namespace atreg
