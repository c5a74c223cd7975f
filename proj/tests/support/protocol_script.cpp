// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include "protocol_script.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>

#include "atreg/json_codec.hpp"
#include "atreg/ply.hpp"
#include "atreg/service.hpp"

namespace atreg::testing {
namespace {

// Client that separates responses (carry request_id) from notifications.
class Scripted {
 public:
  Scripted(std::uint16_t port) : client_("127.0.0.1", port) {}

  Json request(const std::string& id, const std::string& kind, const Json& payload) {
    client_.send(Json{{"v", kProtocolVersion}, {"request_id", id}, {"kind", kind}, {"payload", payload}});
    return await(id);
  }

  void send_raw(const std::string& line) { client_.send_line(line); }

  /// Next response for `id`; notifications seen meanwhile are queued.
  Json await(const std::string& id) {
    last_line_.clear();
    for (;;) {
      const auto line = client_.read_line(60000);
      if (!line) return Json{{"timeout", true}};
      const Json msg = Json::parse(*line);
      if (msg.contains("request_id") && msg["request_id"].is_string() &&
          msg["request_id"].get<std::string>() == id) {
        last_line_ = *line;
        return msg;
      }
      if (msg.contains("request_id")) {
        stray_.push_back(msg);
      } else if (msg.value("kind", "") == "slot_update") {
        notes_.push_back(msg);
      } else {
        stray_.push_back(msg);
      }
    }
  }

  /// Next message without a string request_id (error replies to malformed
  /// lines, notifications).
  Json await_unaddressed() {
    for (;;) {
      const auto line = client_.read_line(60000);
      if (!line) return Json{{"timeout", true}};
      const Json msg = Json::parse(*line);
      if (msg.value("kind", "") == "slot_update") {
        notes_.push_back(msg);
        continue;
      }
      return msg;
    }
  }

  /// Reads until `count` notifications are queued or the timeout passes.
  void collect_notes(std::size_t count, int timeout_ms = 60000) {
    while (notes_.size() < count) {
      const auto line = client_.read_line(timeout_ms);
      if (!line) return;
      const Json msg = Json::parse(*line);
      if (msg.value("kind", "") == "slot_update") notes_.push_back(msg);
      else stray_.push_back(msg);
    }
  }

  const std::vector<Json>& notes() const { return notes_; }
  const std::string& last_line() const { return last_line_; }

 private:
  ServiceClient client_;
  std::vector<Json> notes_;
  std::vector<Json> stray_;
  std::string last_line_;
};

bool ok(const Json& r) { return r.value("ok", false) && r.contains("payload"); }

std::string error_code(const Json& r) {
  if (r.contains("error") && r["error"].is_object()) return r["error"].value("code", "");
  return "";
}

}  // namespace

bool ScriptReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ScriptCheck& c) { return c.passed; });
}

std::string ScriptReport::failures() const {
  std::string out;
  for (const ScriptCheck& c : checks) {
    if (!c.passed) out += c.name + (c.detail.empty() ? "" : " (" + c.detail + ")") + "; ";
  }
  return out;
}

ScriptReport run_protocol_script(const World& world) {
  ScriptReport report;
  auto check = [&](const std::string& name, bool passed, const std::string& detail = "") {
    report.checks.push_back({name, passed, passed ? "" : detail});
    return passed;
  };
  std::set<std::string> kinds;

  ServiceConfig config;
  config.port = 0;
  config.restart_count = 4;
  config.threads = 2;
  Service service(world.library, config);
  service.add_session("default", world.scene);
  service.start();

  const std::string dir = make_temp_dir("protocol");
  write_file(dir + "/scene.ply", write_ply(world.board.scene, PlyFormat::kBinaryLittleEndian));

  {
    Scripted a(service.port());
    Scripted b(service.port());

    Json r = a.request("a-sub", "subscribe", Json::object());
    kinds.insert("subscribe");
    check("subscribe answers with revision 0", ok(r) && r["payload"].value("revision", -1) == 0,
          r.dump());
    r = b.request("b-sub", "subscribe", {{"session_id", "default"}});
    check("second subscriber", ok(r), r.dump());

    r = a.request("models", "list_models", Json::object());
    kinds.insert("list_models");
    check("list_models lists the library",
          ok(r) && r["payload"]["models"].size() == world.library->size(), r.dump());

    r = a.request("load", "load_scene", {{"path", dir + "/scene.ply"}, {"session_id", "second"}});
    kinds.insert("load_scene");
    check("load_scene opens a new session",
          ok(r) && r["payload"].value("session_id", "") == "second" &&
              r["payload"].value("points", 0u) == world.scene->cloud().size(),
          r.dump());
    r = a.request("load-missing", "load_scene", {{"path", dir + "/absent.ply"}});
    check("load_scene of a missing file is a scene_load_error",
          error_code(r) == "scene_load_error", r.dump());
    r = a.request("other-session", "get_slot", {{"session_id", "third"}, {"slot_id", "slot-1"}});
    check("unknown session", error_code(r) == "unknown_session", r.dump());

    // Asynchronous select: pending answer, completion as a notification.
    r = a.request("sel-1", "select_point", {{"anchor", encode(world.anchors[0].point)}});
    kinds.insert("select_point");
    const bool pending = ok(r) && r["payload"].value("status", "") == "pending";
    check("select_point answers pending", pending, r.dump());
    const std::string slot = pending ? r["payload"].value("slot_id", "") : "slot-1";

    r = a.request("sel-2", "select_point", {{"anchor", encode(world.anchors[1].point)}, {"wait", true}});
    check("select_point with wait returns the fitted slot",
          ok(r) && r["payload"].value("status", "") == "fitted" &&
              r["payload"].value("revision", 0) == 2,
          r.dump());

    r = a.request("cycle", "cycle_model", {{"slot_id", slot}});
    kinds.insert("cycle_model");
    const std::string cycle_line = a.last_line();
    check("cycle_model", ok(r) && r["payload"]["slot"].value("active_index", 0) == 1, r.dump());

    const UnitQuaternion cam = world.board.camera_orientation;
    const Vec3 dt{0.003, -0.001, 0.002};
    r = a.request("corr", "apply_correction",
                  {{"slot_id", slot},
                   {"delta_translation", encode(dt)},
                   {"delta_rotation", encode(UnitQuaternion::from_axis_angle({0, 0, 1}, 0.02))},
                   {"camera_orientation", encode(cam)}});
    kinds.insert("apply_correction");
    bool mapped = false;
    if (ok(r) && r["payload"]["slot"]["history"].size() == 1) {
      const Vec3 world_dt =
          decode_vec3(r["payload"]["slot"]["history"][0]["world_delta_translation"], "wdt");
      mapped = (world_dt - cam.rotate(dt)).norm() < 1e-12;
    }
    check("apply_correction maps camera deltas to the world frame", mapped, r.dump());

    // Non-unit quaternion: rejected, slot untouched, no revision.
    const Json before = a.request("peek-1", "get_slot", {{"slot_id", slot}});
    r = a.request("corr-bad", "apply_correction",
                  {{"slot_id", slot},
                   {"delta_translation", encode(Vec3{0, 0, 0})},
                   {"delta_rotation", Json::array({2.0, 0.0, 0.0, 0.0})}});
    const Json after = a.request("peek-2", "get_slot", {{"slot_id", slot}});
    kinds.insert("get_slot");
    check("non-unit quaternion is invalid_argument", error_code(r) == "invalid_argument", r.dump());
    check("rejected correction leaves the slot unchanged",
          ok(before) && ok(after) && before["payload"] == after["payload"], after.dump());

    r = a.request("accept", "accept_fit", {{"slot_id", slot}});
    kinds.insert("accept_fit");
    check("accept_fit", ok(r) && r["payload"]["slot"].value("accepted", false), r.dump());
    r = a.request("cycle-accepted", "cycle_model", {{"slot_id", slot}});
    check("accepted slot refuses changes", error_code(r) == "slot_accepted", r.dump());
    r = a.request("missing-slot", "cycle_model", {{"slot_id", "slot-99"}});
    check("unknown slot", error_code(r) == "slot_not_found", r.dump());

    // Duplicate request id: cached bytes, no re-execution.
    a.send_raw(canonical_dump(Json{{"v", kProtocolVersion},
                                   {"request_id", "cycle"},
                                   {"kind", "cycle_model"},
                                   {"payload", {{"slot_id", slot}}}}));
    a.await("cycle");
    check("duplicate request_id returns the cached response", a.last_line() == cycle_line,
          a.last_line());

    r = a.request("export", "export_session", Json::object());
    kinds.insert("export_session");
    bool faithful = false;
    if (ok(r) && r["payload"]["document"].is_string()) {
      const std::string doc = r["payload"]["document"].get<std::string>();
      faithful = export_session(import_session(doc)) == doc;
    }
    check("export_session returns a canonical document", faithful, r.dump());

    // Envelope errors.
    a.send_raw("{not json");
    r = a.await_unaddressed();
    check("malformed JSON", error_code(r) == "malformed" && r["request_id"].is_null(), r.dump());
    a.send_raw(R"({"v": 1, "kind": "list_models", "payload": {}})");
    r = a.await_unaddressed();
    check("missing request_id", error_code(r) == "malformed", r.dump());
    a.send_raw(R"({"v": 2, "request_id": "v2", "kind": "list_models", "payload": {}})");
    r = a.await("v2");
    check("unsupported version", error_code(r) == "unsupported_version", r.dump());
    r = a.request("warp", "teleport", Json::object());
    check("unknown kind", error_code(r) == "unsupported", r.dump());
    a.send_raw(R"({"v": 1, "request_id": "bad-payload", "kind": "get_slot", "payload": []})");
    r = a.await("bad-payload");
    check("non-object payload", error_code(r) == "malformed", r.dump());

    r = a.request("final-sub", "subscribe", Json::object());
    const int final_revision = ok(r) ? r["payload"].value("revision", -1) : -1;
    check("revision counts each applied mutation once", final_revision == 5, r.dump());

    // Both subscribers see revisions 1..5 in order, each exactly once.
    for (Scripted* s : {&a, &b}) {
      s->collect_notes(5, 10000);
      std::vector<int> revs;
      for (const Json& n : s->notes()) revs.push_back(n.value("revision", -1));
      const bool gapless = revs == std::vector<int>{1, 2, 3, 4, 5};
      std::string seen;
      for (int v : revs) seen += std::to_string(v) + " ";
      check(s == &a ? "subscriber A sees gapless revisions" : "subscriber B sees gapless revisions",
            gapless, seen);
    }
    const auto& notes = b.notes();
    if (notes.size() >= 5) {
      const std::vector<std::string> causes = {"select_point", "select_point", "cycle_model",
                                               "apply_correction", "accept_fit"};
      bool match = true;
      for (std::size_t i = 0; i < 5; ++i) {
        match = match && notes[i]["payload"].value("cause", "") == causes[i];
      }
      check("notifications name their cause", match);
    }
  }

  service.stop();
  std::filesystem::remove_all(dir);
  report.kinds_exercised.assign(kinds.begin(), kinds.end());
  check("every message kind exercised", kinds.size() == 9, std::to_string(kinds.size()));
  return report;
}

}  // namespace atreg::testing
