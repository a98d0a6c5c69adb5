#pragma once

#include "assay/engine.hpp"

#include <json.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace assay {

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

// Live labeling sessions over one pool. Each call is atomic per session;
// sessions are independent of each other. With a state directory, every
// session is persisted as <id>.json (config, seed) plus an append-only
// <id>.jsonl of applied labels, and reloaded by replaying those labels.
class SessionService {
 public:
  SessionService(std::shared_ptr<const Pool> pool, nlohmann::json default_config, std::string state_dir = {});

  // Body: a config object (or {"config": {...}}) merged over the default.
  ServiceResponse create(const nlohmann::json& body);
  // Returns the pending query, drawing a new one only when none is pending.
  ServiceResponse next(const std::string& id);
  // Body: {"instance_id": "...", "outcome": v}.
  ServiceResponse label(const std::string& id, const nlohmann::json& body);
  ServiceResponse state(const std::string& id);

  std::size_t size() const;

 private:
  struct Entry {
    std::mutex mu;
    std::shared_ptr<const SessionContext> ctx;
    std::unique_ptr<AssessmentSession> session;
    std::optional<Step> last_applied;
  };

  std::shared_ptr<Entry> find(const std::string& id) const;
  std::string fresh_id();
  void load_state_dir();
  void append_log(const std::string& id, const Step& step) const;
  nlohmann::json query_payload(const Entry& e) const;

  std::shared_ptr<const Pool> pool_;
  nlohmann::json default_config_;
  std::string state_dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t id_state_;
};

ServiceResponse error_response(int status, const std::string& message);

// HTTP front end: POST /sessions, GET /sessions/{id}/next,
// POST /sessions/{id}/label, GET /sessions/{id}/state. A non-empty token
// requires "Authorization: Bearer <token>" on every request.
class HttpServer {
 public:
  HttpServer(SessionService& service, std::string token = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 binds any free port. Returns the bound port, or -1.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  bool listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace assay
