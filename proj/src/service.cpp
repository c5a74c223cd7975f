// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include "atreg/service.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <filesystem>
#include <functional>

#include "atreg/error.hpp"
#include "atreg/ply.hpp"

namespace atreg {
namespace {

constexpr std::size_t kMaxLine = 1 << 20;
constexpr std::size_t kCacheCapacity = 4096;

Json envelope(const std::string& kind) { return {{"v", kProtocolVersion}, {"kind", kind}}; }

std::string code_name(const Error& e) { return std::string(error_code_name(e.code())); }

bool write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

std::string require_string(const Json& payload, const char* key) {
  const auto it = payload.find(key);
  if (it == payload.end() || !it->is_string()) {
    throw Error(ErrorCode::kInvalidArgument, std::string("payload needs string field '") + key + "'");
  }
  return it->get<std::string>();
}

const Json& require_field(const Json& payload, const char* key) {
  const auto it = payload.find(key);
  if (it == payload.end()) {
    throw Error(ErrorCode::kInvalidArgument, std::string("payload needs field '") + key + "'");
  }
  return *it;
}

std::pair<std::string, std::uint16_t> split_listen(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "listen address must be host:port");
  }
  const std::string port = s.substr(colon + 1);
  char* end = nullptr;
  const long p = std::strtol(port.c_str(), &end, 10);
  if (port.empty() || *end != '\0' || p < 0 || p > 65535) {
    throw Error(ErrorCode::kInvalidArgument, "bad port in listen address '" + s + "'");
  }
  return {s.substr(0, colon), static_cast<std::uint16_t>(p)};
}

}  // namespace

ServiceConfig parse_service_config(std::string_view json_text, ServiceConfig base) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("service config: ") + e.what());
  }
  if (!j.is_object()) {
    throw Error(ErrorCode::kInvalidArgument, "service config must be an object");
  }
  auto str = [&](const char* key, std::string& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_string()) {
      throw Error(ErrorCode::kInvalidArgument, std::string("service config: '") + key + "' must be a string");
    }
    out = j[key].get<std::string>();
  };
  auto num = [&](const char* key) -> std::optional<std::uint64_t> {
    if (!j.contains(key)) return std::nullopt;
    if (!j[key].is_number_unsigned()) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("service config: '") + key + "' must be a non-negative integer");
    }
    return j[key].get<std::uint64_t>();
  };
  if (j.contains("listen")) {
    std::string listen;
    str("listen", listen);
    std::tie(base.host, base.port) = split_listen(listen);
  }
  str("manifest", base.manifest_path);
  str("scene", base.scene_path);
  if (auto v = num("restart_count")) base.restart_count = *v;
  if (auto v = num("sample_count")) base.sample_count = *v;
  if (auto v = num("seed")) base.seed = *v;
  if (auto v = num("threads")) base.threads = *v;
  return base;
}

struct Service::Host {
  std::string session_id;
  std::unique_ptr<Session> session;

  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::function<void()>> tasks;
  bool busy = false;
  bool stop = false;
  std::thread worker;

  // Published state, replaced by the worker after every mutation.
  std::mutex state_mu;
  std::uint64_t revision = 0;
  SessionSnapshot published;

  std::mutex sub_mu;
  std::vector<std::weak_ptr<Peer>> subscribers;

  void run() {
    while (true) {
      std::function<void()> task;
      {
        std::unique_lock<std::mutex> lock(mu);
        cv.wait(lock, [&] { return stop || !tasks.empty(); });
        if (stop) return;
        task = std::move(tasks.front());
        tasks.pop_front();
        busy = true;
      }
      task();
      {
        std::lock_guard<std::mutex> lock(mu);
        busy = false;
      }
      cv.notify_all();
    }
  }
};

struct Service::CacheEntry {
  bool done = false;
  std::string line;
  std::vector<std::weak_ptr<Peer>> waiters;
};

class Service::Connection : public Peer, public std::enable_shared_from_this<Connection> {
 public:
  Connection(Service& service, int fd) : service_(service), fd_(fd) {}
  ~Connection() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void start() {
    thread_ = std::thread([self = shared_from_this()] { self->read_loop(); });
  }

  void send(const std::string& line) override {
    std::lock_guard<std::mutex> lock(write_mu_);
    if (closed_) return;
    if (!write_all(fd_, line + "\n")) closed_ = true;
  }

  void shutdown() { ::shutdown(fd_, SHUT_RDWR); }
  void join() {
    if (thread_.joinable()) thread_.join();
  }
  bool finished() const { return finished_.load(); }

 private:
  void read_loop() {
    std::string buffer;
    bool discarding = false;
    char chunk[4096];
    while (true) {
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t start = 0;
      while (true) {
        const std::size_t nl = buffer.find('\n', start);
        if (nl == std::string::npos) break;
        std::string line = buffer.substr(start, nl - start);
        start = nl + 1;
        if (discarding) {
          discarding = false;
          continue;
        }
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        service_.handle_line(shared_from_this(), line);
      }
      buffer.erase(0, start);
      if (buffer.size() > kMaxLine) {
        buffer.clear();
        if (!discarding) {
          service_.respond_error(shared_from_this(), nullptr, "", "malformed",
                                 "request line exceeds " + std::to_string(kMaxLine) + " bytes");
        }
        discarding = true;
      }
    }
    {
      std::lock_guard<std::mutex> lock(write_mu_);
      closed_ = true;
    }
    finished_ = true;
  }

  Service& service_;
  int fd_;
  std::thread thread_;
  std::mutex write_mu_;
  bool closed_ = false;
  std::atomic<bool> finished_{false};
};

namespace {

ModelLibrary load_library(const ServiceConfig& config) {
  LibraryManifest manifest = load_manifest(config.manifest_path);
  if (config.sample_count) {
    for (ManifestEntry& e : manifest.entries) e.sample_count = *config.sample_count;
  }
  return ModelLibrary::load(manifest, config.seed);
}

std::shared_ptr<const Scene> load_scene_file(const std::string& path, std::string scene_id) {
  try {
    PointCloud cloud = load_cloud(path);
    if (cloud.empty()) {
      throw Error(ErrorCode::kEmptyCloud, "scene has no valid points");
    }
    if (scene_id.empty()) scene_id = std::filesystem::path(path).stem().string();
    return std::make_shared<const Scene>(std::move(scene_id), std::move(cloud));
  } catch (const Error& e) {
    throw Error(ErrorCode::kSceneLoadError, "scene '" + path + "': " + e.what());
  }
}

}  // namespace

Service::Service(ServiceConfig config)
    : Service(std::make_shared<const ModelLibrary>(load_library(config)), config) {}

Service::Service(std::shared_ptr<const ModelLibrary> library, ServiceConfig config)
    : config_(std::move(config)),
      library_(std::move(library)),
      pool_(std::make_unique<ComputePool>(config_.threads)) {
  if (!config_.scene_path.empty()) {
    add_session("default", load_scene_file(config_.scene_path, ""));
  }
}

Service::~Service() {
  stop();
  std::lock_guard<std::mutex> lock(hosts_mu_);
  for (auto& [id, host] : hosts_) {
    {
      std::lock_guard<std::mutex> l(host->mu);
      host->stop = true;
    }
    host->cv.notify_all();
    if (host->worker.joinable()) host->worker.join();
  }
}

std::string Service::add_session(std::string session_id, std::shared_ptr<const Scene> scene) {
  SessionConfig sc;
  sc.icp = config_.icp;
  sc.restarts.restart_count = config_.restart_count;
  sc.restarts.seed = config_.seed;
  auto host = std::make_shared<Host>();
  host->session = std::make_unique<Session>(library_, std::move(scene), sc, pool_.get());
  host->published = host->session->snapshot();
  std::lock_guard<std::mutex> lock(hosts_mu_);
  if (session_id.empty()) {
    do {
      session_id = "session-" + std::to_string(next_session_++);
    } while (hosts_.count(session_id) != 0);
  } else if (hosts_.count(session_id) != 0) {
    throw Error(ErrorCode::kInvalidArgument, "session '" + session_id + "' already exists");
  }
  host->session_id = session_id;
  host->worker = std::thread([h = host.get()] { h->run(); });
  hosts_[session_id] = host;
  return session_id;
}

void Service::start() {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(config_.port);
  if (::getaddrinfo(config_.host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr) {
    throw Error(ErrorCode::kBindFailure, "cannot resolve '" + config_.host + "'");
  }
  int fd = -1;
  std::string why = "no usable address";
  for (addrinfo* a = res; a != nullptr; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, a->ai_addr, a->ai_addrlen) == 0 && ::listen(fd, 64) == 0) break;
    why = std::strerror(errno);
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) {
    throw Error(ErrorCode::kBindFailure,
                "cannot listen on " + config_.host + ":" + port + ": " + why);
  }
  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  bound_port_ = addr.ss_family == AF_INET6
                    ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                    : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  listen_fd_ = fd;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void Service::accept_loop() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int r = ::poll(&p, 1, 200);
    if (r <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    auto conn = std::make_shared<Connection>(*this, fd);
    std::lock_guard<std::mutex> lock(conn_mu_);
    for (auto it = connections_.begin(); it != connections_.end();) {
      if ((*it)->finished()) {
        (*it)->join();
        it = connections_.erase(it);
      } else {
        ++it;
      }
    }
    connections_.push_back(conn);
    conn->start();
  }
}

void Service::stop() {
  if (stopping_.exchange(true)) return;
  if (accept_thread_.joinable()) accept_thread_.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  std::vector<std::shared_ptr<Connection>> conns;
  {
    std::lock_guard<std::mutex> lock(conn_mu_);
    conns.swap(connections_);
  }
  for (auto& c : conns) c->shutdown();
  for (auto& c : conns) c->join();
}

void Service::drain() {
  std::vector<std::shared_ptr<Host>> hosts;
  {
    std::lock_guard<std::mutex> lock(hosts_mu_);
    for (auto& [id, h] : hosts_) hosts.push_back(h);
  }
  for (auto& h : hosts) {
    std::unique_lock<std::mutex> lock(h->mu);
    h->cv.wait(lock, [&] { return h->tasks.empty() && !h->busy; });
  }
}

void Service::finish(const std::string& request_id, const std::string& line) {
  std::vector<std::weak_ptr<Peer>> waiters;
  {
    std::lock_guard<std::mutex> lock(cache_mu_);
    const auto it = cache_.find(request_id);
    if (it == cache_.end()) return;
    it->second->done = true;
    it->second->line = line;
    waiters.swap(it->second->waiters);
    if (cache_order_.size() > kCacheCapacity) {
      std::size_t dropped = 0;
      std::vector<std::string> keep;
      for (const std::string& id : cache_order_) {
        auto e = cache_.find(id);
        if (dropped < cache_order_.size() - kCacheCapacity && e != cache_.end() && e->second->done) {
          cache_.erase(e);
          ++dropped;
        } else {
          keep.push_back(id);
        }
      }
      cache_order_.swap(keep);
    }
  }
  for (auto& w : waiters) {
    if (auto p = w.lock()) p->send(line);
  }
}

void Service::respond(const std::shared_ptr<Peer>& peer, const std::string& request_id,
                      const std::string& kind, const Json& result) {
  Json msg = envelope(kind);
  msg["request_id"] = request_id;
  msg["ok"] = true;
  msg["payload"] = result;
  const std::string line = canonical_dump(msg);
  peer->send(line);
  finish(request_id, line);
}

void Service::respond_error(const std::shared_ptr<Peer>& peer, const Json& request_id,
                            const std::string& kind, std::string_view code,
                            const std::string& message) {
  Json msg = envelope(kind);
  msg["request_id"] = request_id;
  msg["ok"] = false;
  msg["error"] = {{"code", code}, {"message", message}};
  const std::string line = canonical_dump(msg);
  peer->send(line);
  if (request_id.is_string()) finish(request_id.get<std::string>(), line);
}

void Service::handle_line(const std::shared_ptr<Peer>& peer, const std::string& line) {
  Json msg;
  try {
    msg = Json::parse(line);
  } catch (const Json::exception& e) {
    respond_error(peer, nullptr, "", "malformed", std::string("invalid JSON: ") + e.what());
    return;
  }
  if (!msg.is_object()) {
    respond_error(peer, nullptr, "", "malformed", "message must be a JSON object");
    return;
  }
  const Json rid = msg.contains("request_id") ? msg["request_id"] : Json(nullptr);
  const std::string kind =
      msg.contains("kind") && msg["kind"].is_string() ? msg["kind"].get<std::string>() : "";
  if (!rid.is_string() || rid.get<std::string>().empty()) {
    respond_error(peer, nullptr, kind, "malformed", "request_id must be a non-empty string");
    return;
  }
  const std::string request_id = rid.get<std::string>();
  {
    std::unique_lock<std::mutex> lock(cache_mu_);
    const auto it = cache_.find(request_id);
    if (it != cache_.end()) {
      if (it->second->done) {
        const std::string cached = it->second->line;
        lock.unlock();
        peer->send(cached);
      } else {
        it->second->waiters.push_back(peer);
      }
      return;
    }
    cache_[request_id] = std::make_shared<CacheEntry>();
    cache_order_.push_back(request_id);
  }
  if (!msg.contains("v") || !msg["v"].is_number_integer() ||
      msg["v"].get<std::int64_t>() != kProtocolVersion) {
    respond_error(peer, rid, kind, "unsupported_version",
                  "this service speaks protocol version " + std::to_string(kProtocolVersion));
    return;
  }
  if (kind.empty()) {
    respond_error(peer, rid, kind, "malformed", "kind must be a non-empty string");
    return;
  }
  const Json payload = msg.contains("payload") ? msg["payload"] : Json::object();
  if (!payload.is_object()) {
    respond_error(peer, rid, kind, "malformed", "payload must be an object");
    return;
  }
  try {
    dispatch(peer, request_id, kind, payload);
  } catch (const Error& e) {
    respond_error(peer, rid, kind, code_name(e), e.what());
  } catch (const std::exception& e) {
    respond_error(peer, rid, kind, "internal", e.what());
  }
}

std::shared_ptr<Service::Host> Service::host_for(const Json& payload) {
  std::string id = "default";
  if (payload.contains("session_id")) id = require_string(payload, "session_id");
  std::lock_guard<std::mutex> lock(hosts_mu_);
  const auto it = hosts_.find(id);
  if (it == hosts_.end()) {
    throw Error(ErrorCode::kUnknownSession, "no session '" + id + "'");
  }
  return it->second;
}

void Service::enqueue(const std::shared_ptr<Host>& host, std::function<void()> task) {
  {
    std::lock_guard<std::mutex> lock(host->mu);
    host->tasks.push_back(std::move(task));
  }
  host->cv.notify_all();
}

void Service::notify(Host& host, const std::string& cause, const std::string& cause_request_id,
                     const ObjectSlot& slot) {
  // Runs on the host's worker thread only.
  std::uint64_t revision = 0;
  {
    std::lock_guard<std::mutex> lock(host.state_mu);
    revision = ++host.revision;
    host.published = host.session->snapshot();
  }
  Json msg = envelope("slot_update");
  msg["session_id"] = host.session_id;
  msg["revision"] = revision;
  msg["payload"] = {{"cause", cause},
                    {"cause_request_id", cause_request_id},
                    {"slot", encode(slot, true)}};
  const std::string line = canonical_dump(msg);
  std::lock_guard<std::mutex> lock(host.sub_mu);
  for (auto it = host.subscribers.begin(); it != host.subscribers.end();) {
    if (auto p = it->lock()) {
      p->send(line);
      ++it;
    } else {
      it = host.subscribers.erase(it);
    }
  }
}

void Service::dispatch(const std::shared_ptr<Peer>& peer, const std::string& request_id,
                       const std::string& kind, const Json& payload) {
  if (kind == "list_models") {
    Json models = Json::array();
    for (const ModelEntry& m : library_->entries()) {
      models.push_back({{"model_id", m.model_id},
                        {"display_name", m.display_name},
                        {"sample_count", m.sampled.size()},
                        {"diameter", m.diameter}});
    }
    respond(peer, request_id, kind, {{"models", models}});
    return;
  }
  if (kind == "load_scene") {
    const std::string path = require_string(payload, "path");
    std::string wanted;
    if (payload.contains("session_id")) wanted = require_string(payload, "session_id");
    auto scene = load_scene_file(path, payload.contains("scene_id")
                                           ? require_string(payload, "scene_id")
                                           : std::string());
    const std::size_t points = scene->cloud().size();
    const std::string scene_id = scene->scene_id;
    const std::string id = add_session(wanted, std::move(scene));
    respond(peer, request_id, kind,
            {{"session_id", id}, {"scene_id", scene_id}, {"points", points}});
    return;
  }

  static const std::vector<std::string> kSessionKinds = {
      "select_point", "cycle_model", "apply_correction", "accept_fit",
      "get_slot",     "export_session", "subscribe"};
  if (std::find(kSessionKinds.begin(), kSessionKinds.end(), kind) == kSessionKinds.end()) {
    respond_error(peer, request_id, kind, "unsupported", "unknown message kind '" + kind + "'");
    return;
  }
  const std::shared_ptr<Host> host = host_for(payload);

  if (kind == "subscribe") {
    std::uint64_t revision = 0;
    {
      std::lock_guard<std::mutex> sub(host->sub_mu);
      {
        std::lock_guard<std::mutex> lock(host->state_mu);
        revision = host->revision;
      }
      host->subscribers.push_back(peer);
    }
    respond(peer, request_id, kind, {{"session_id", host->session_id}, {"revision", revision}});
    return;
  }
  if (kind == "get_slot") {
    const std::string slot_id = require_string(payload, "slot_id");
    std::lock_guard<std::mutex> lock(host->state_mu);
    for (const ObjectSlot& s : host->published.slots) {
      if (s.slot_id == slot_id) {
        respond(peer, request_id, kind,
                {{"session_id", host->session_id},
                 {"revision", host->revision},
                 {"slot", encode(s, true)}});
        return;
      }
    }
    throw Error(ErrorCode::kSlotNotFound, "no slot '" + slot_id + "'");
  }
  if (kind == "export_session") {
    ExportOptions options;
    if (payload.contains("include_timing")) {
      const Json& t = payload["include_timing"];
      if (!t.is_boolean()) throw Error(ErrorCode::kInvalidArgument, "include_timing must be a boolean");
      options.include_timing = t.get<bool>();
    }
    std::lock_guard<std::mutex> lock(host->state_mu);
    respond(peer, request_id, kind,
            {{"session_id", host->session_id},
             {"revision", host->revision},
             {"document", export_session(host->published, options)}});
    return;
  }

  // Mutations: validate here, apply on the session's writer thread.
  if (kind == "select_point") {
    const Point3 anchor = decode_vec3(require_field(payload, "anchor"), "anchor");
    bool wait = false;
    if (payload.contains("wait")) {
      if (!payload["wait"].is_boolean()) throw Error(ErrorCode::kInvalidArgument, "wait must be a boolean");
      wait = payload["wait"].get<bool>();
    }
    const std::string slot_id = host->session->reserve_slot_id();
    if (!wait) {
      respond(peer, request_id, kind,
              {{"session_id", host->session_id}, {"slot_id", slot_id}, {"status", "pending"}});
    }
    enqueue(host, [this, host, peer, request_id, kind, anchor, slot_id, wait] {
      ObjectSlot slot;
      try {
        slot = host->session->select_point(anchor, slot_id);
      } catch (const NoFitFound&) {
        slot = host->session->slot(slot_id);
      } catch (const Error& e) {
        if (wait) {
          respond_error(peer, request_id, kind, code_name(e), e.what());
        } else {
          Json msg = envelope("request_failed");
          msg["session_id"] = host->session_id;
          msg["payload"] = {{"cause_request_id", request_id},
                            {"slot_id", slot_id},
                            {"error", {{"code", code_name(e)}, {"message", e.what()}}}};
          peer->send(canonical_dump(msg));
        }
        return;
      }
      notify(*host, kind, request_id, slot);
      if (wait) {
        std::lock_guard<std::mutex> lock(host->state_mu);
        respond(peer, request_id, kind,
                {{"session_id", host->session_id},
                 {"revision", host->revision},
                 {"status", slot.has_fit() ? "fitted" : "unfit"},
                 {"slot", encode(slot, true)}});
      }
    });
    return;
  }

  const std::string slot_id = require_string(payload, "slot_id");
  std::function<ObjectSlot()> op;
  if (kind == "cycle_model") {
    op = [host, slot_id] { return host->session->cycle_model(slot_id); };
  } else if (kind == "accept_fit") {
    op = [host, slot_id] { return host->session->accept_fit(slot_id); };
  } else {
    const Vec3 dt = decode_vec3(require_field(payload, "delta_translation"), "delta_translation");
    const UnitQuaternion dr =
        decode_quaternion(require_field(payload, "delta_rotation"), "delta_rotation");
    const UnitQuaternion cam =
        payload.contains("camera_orientation")
            ? decode_quaternion(payload["camera_orientation"], "camera_orientation")
            : UnitQuaternion::identity();
    op = [host, slot_id, dt, dr, cam] {
      return host->session->apply_correction(slot_id, dt, dr, cam);
    };
  }
  enqueue(host, [this, host, peer, request_id, kind, op] {
    ObjectSlot slot;
    try {
      slot = op();
    } catch (const Error& e) {
      respond_error(peer, request_id, kind, code_name(e), e.what());
      return;
    } catch (const std::exception& e) {
      respond_error(peer, request_id, kind, "internal", e.what());
      return;
    }
    notify(*host, kind, request_id, slot);
    std::uint64_t revision = 0;
    {
      std::lock_guard<std::mutex> lock(host->state_mu);
      revision = host->revision;
    }
    respond(peer, request_id, kind,
            {{"session_id", host->session_id}, {"revision", revision}, {"slot", encode(slot, true)}});
  });
}

ServiceClient::ServiceClient(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string p = std::to_string(port);
  if (::getaddrinfo(host.c_str(), p.c_str(), &hints, &res) != 0 || res == nullptr) {
    throw Error(ErrorCode::kIoError, "cannot resolve '" + host + "'");
  }
  for (addrinfo* a = res; a != nullptr; a = a->ai_next) {
    fd_ = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd_ < 0) continue;
    if (::connect(fd_, a->ai_addr, a->ai_addrlen) == 0) break;
    ::close(fd_);
    fd_ = -1;
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) {
    throw Error(ErrorCode::kIoError, "cannot connect to " + host + ":" + p);
  }
}

ServiceClient::~ServiceClient() {
  if (fd_ >= 0) ::close(fd_);
}

void ServiceClient::send_line(const std::string& line) {
  if (!write_all(fd_, line + "\n")) {
    throw Error(ErrorCode::kIoError, "send failed");
  }
}

std::optional<std::string> ServiceClient::read_line(int timeout_ms) {
  while (true) {
    const std::size_t nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    pollfd p{fd_, POLLIN, 0};
    const int r = ::poll(&p, 1, timeout_ms);
    if (r <= 0) return std::nullopt;
    char chunk[4096];
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n <= 0) return std::nullopt;
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::optional<Json> ServiceClient::read(int timeout_ms) {
  auto line = read_line(timeout_ms);
  if (!line) return std::nullopt;
  return Json::parse(*line);
}

}  // namespace atreg
