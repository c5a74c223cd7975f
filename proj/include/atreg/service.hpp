// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

// Session service: newline-delimited JSON over TCP.
//
// Request:       {"v": 1, "request_id": "...", "kind": "...", "payload": {...}}
// Response:      {"v": 1, "request_id": "...", "kind": "...", "ok": true, "payload": {...}}
//                {"v": 1, "request_id": "...", "kind": "...", "ok": false,
//                 "error": {"code": "...", "message": "..."}}
// Notification:  {"v": 1, "kind": "slot_update", "session_id": "...", "revision": n,
//                 "payload": {"cause": "...", "cause_request_id": "...", "slot": {...}}}
//
// Kinds: load_scene, list_models, select_point, cycle_model, apply_correction,
// accept_fit, get_slot, export_session, subscribe.
//
// Mutations of one session run in order on that session's writer thread and
// bump its revision by exactly one each; subscribers receive one
// notification per revision, in order. select_point is answered at once with
// {"status": "pending", "slot_id"} and completes as a notification, unless
// the payload sets "wait": true. A request_id that was already answered gets
// the cached response again without re-executing.

#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "atreg/compute_pool.hpp"
#include "atreg/icp.hpp"
#include "atreg/json_codec.hpp"
#include "atreg/model_library.hpp"
#include "atreg/session.hpp"

namespace atreg {

inline constexpr int kProtocolVersion = 1;

struct ServiceConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 7878;  // 0 picks an ephemeral port
  std::string manifest_path;
  /// Loaded at start as session "default" when non-empty.
  std::string scene_path;
  std::size_t restart_count = 32;
  std::optional<std::size_t> sample_count;  // overrides the manifest
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  IcpParams icp;
};

/// {"listen": "host:port", "manifest", "scene", "restart_count",
///  "sample_count", "seed", "threads"}; absent keys keep `base` values.
/// Throws Error(kInvalidArgument).
ServiceConfig parse_service_config(std::string_view json_text, ServiceConfig base = {});

/// Receives protocol lines; implemented by TCP connections and by tests.
class Peer {
 public:
  virtual ~Peer() = default;
  /// `line` has no trailing newline. Must be thread-safe.
  virtual void send(const std::string& line) = 0;
};

class Service {
 public:
  /// Loads the manifest (and the scene, if configured). Throws
  /// Error(kManifestError | kMeshLoadError | kSceneLoadError).
  explicit Service(ServiceConfig config);
  Service(std::shared_ptr<const ModelLibrary> library, ServiceConfig config);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and starts accepting. Throws Error(kBindFailure).
  void start();
  /// Closes the listener and all connections; idempotent.
  void stop();
  std::uint16_t port() const { return bound_port_; }

  /// Processes one request line from `peer`; every response and notification
  /// goes through peer->send (possibly later, from another thread).
  void handle_line(const std::shared_ptr<Peer>& peer, const std::string& line);

  /// Creates a session over an in-memory scene; returns its id.
  std::string add_session(std::string session_id, std::shared_ptr<const Scene> scene);

  /// Blocks until every queued mutation has been applied.
  void drain();

 private:
  struct Host;
  struct CacheEntry;
  class Connection;

  void dispatch(const std::shared_ptr<Peer>& peer, const std::string& request_id,
                const std::string& kind, const Json& payload);
  void respond(const std::shared_ptr<Peer>& peer, const std::string& request_id,
               const std::string& kind, const Json& result);
  void respond_error(const std::shared_ptr<Peer>& peer, const Json& request_id,
                     const std::string& kind, std::string_view code, const std::string& message);
  void finish(const std::string& request_id, const std::string& line);
  std::shared_ptr<Host> host_for(const Json& payload);
  void enqueue(const std::shared_ptr<Host>& host, std::function<void()> task);
  void notify(Host& host, const std::string& cause, const std::string& cause_request_id,
              const ObjectSlot& slot);
  void accept_loop();

  ServiceConfig config_;
  std::shared_ptr<const ModelLibrary> library_;
  std::unique_ptr<ComputePool> pool_;

  std::mutex hosts_mu_;
  std::map<std::string, std::shared_ptr<Host>> hosts_;
  std::uint64_t next_session_ = 1;

  std::mutex cache_mu_;
  std::map<std::string, std::shared_ptr<CacheEntry>> cache_;
  std::vector<std::string> cache_order_;

  int listen_fd_ = -1;
  std::uint16_t bound_port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::mutex conn_mu_;
  std::vector<std::shared_ptr<Connection>> connections_;
};

/// Blocking line client, used by tests and scripted callers.
class ServiceClient {
 public:
  /// Throws Error(kIoError).
  ServiceClient(const std::string& host, std::uint16_t port);
  ~ServiceClient();
  ServiceClient(const ServiceClient&) = delete;
  ServiceClient& operator=(const ServiceClient&) = delete;

  void send_line(const std::string& line);
  void send(const Json& message) { send_line(canonical_dump(message)); }
  /// nullopt on timeout or disconnect.
  std::optional<std::string> read_line(int timeout_ms = 30000);
  std::optional<Json> read(int timeout_ms = 30000);

 private:
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace atreg
