#include "assay/service.hpp"

#include "assay/report.hpp"

#include <httplib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

namespace assay {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string error_code(int status) {
  switch (status) {
    case 400: return "bad_request";
    case 401: return "unauthorized";
    case 404: return "not_found";
    case 409: return "conflict";
    case 410: return "gone";
    case 422: return "unprocessable";
    default: return "internal";
  }
}

}  // namespace

ServiceResponse error_response(int status, const std::string& message) {
  return {status, {{"error", error_code(status)}, {"message", message}}};
}

SessionService::SessionService(std::shared_ptr<const Pool> pool, json default_config, std::string state_dir)
    : pool_(std::move(pool)),
      default_config_(default_config.is_null() ? json::object() : std::move(default_config)),
      state_dir_(std::move(state_dir)),
      id_state_(std::random_device{}()) {
  if (!pool_ || pool_->empty()) throw std::invalid_argument("service needs a non-empty pool");
  if (!state_dir_.empty()) {
    fs::create_directories(state_dir_);
    load_state_dir();
  }
}

std::size_t SessionService::size() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

std::shared_ptr<SessionService::Entry> SessionService::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::string SessionService::fresh_id() {
  for (;;) {
    id_state_ += 0x9E3779B97F4A7C15ULL;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(splitmix64(id_state_)));
    if (!sessions_.count(buf)) return buf;
  }
}

void SessionService::append_log(const std::string& id, const Step& step) const {
  if (state_dir_.empty()) return;
  std::ofstream out(fs::path(state_dir_) / (id + ".jsonl"), std::ios::app);
  out << json{{"i", step.i}, {"id", (*pool_)[step.record].id}, {"z", step.z}}.dump() << '\n';
  out.flush();
  if (!out) throw std::runtime_error("cannot append to the session log of " + id);
}

void SessionService::load_state_dir() {
  for (const auto& file : fs::directory_iterator(state_dir_)) {
    if (file.path().extension() != ".json") continue;
    const std::string id = file.path().stem().string();
    std::ifstream in(file.path());
    const json meta = json::parse(in);
    auto entry = std::make_shared<Entry>();
    entry->ctx = make_session_context(pool_, session_config_from_json(meta.at("config")));
    entry->session = std::make_unique<AssessmentSession>(entry->ctx, meta.at("seed").get<std::uint64_t>());

    std::ifstream log(fs::path(state_dir_) / (id + ".jsonl"));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(log, line)) {
      ++line_no;
      if (line.empty()) continue;
      const json j = json::parse(line);
      auto& s = *entry->session;
      if (s.pending().empty() && s.propose().empty()) {
        throw InputError("session " + id + " log continues past its end", line_no);
      }
      const Query q = s.pending().front();
      if ((*pool_)[q.record].id != j.at("id").get<std::string>()) {
        throw InputError("session " + id + " log does not replay", line_no);
      }
      s.observe(q, j.at("z").get<int>());
      entry->last_applied = s.steps().back();
    }
    sessions_[id] = std::move(entry);
  }
}

ServiceResponse SessionService::create(const json& body) {
  json cfg_json = default_config_;
  if (!body.is_null()) {
    if (!body.is_object()) return error_response(400, "session body must be a JSON object");
    cfg_json.merge_patch(body.contains("config") ? body.at("config") : body);
  }
  std::shared_ptr<const SessionContext> ctx;
  try {
    ctx = make_session_context(pool_, session_config_from_json(cfg_json));
  } catch (const std::exception& e) {
    return error_response(400, e.what());
  }
  auto entry = std::make_shared<Entry>();
  entry->ctx = ctx;
  entry->session = std::make_unique<AssessmentSession>(ctx, ctx->cfg.seed);

  std::lock_guard lock(mu_);
  const std::string id = fresh_id();
  if (!state_dir_.empty()) {
    std::ofstream out(fs::path(state_dir_) / (id + ".json"));
    out << json{{"config", to_json(ctx->cfg)}, {"seed", ctx->cfg.seed}}.dump(2) << '\n';
    if (!out) return error_response(500, "cannot persist session");
  }
  sessions_[id] = entry;
  return {201,
          {{"session", id},
           {"config_digest", config_digest(ctx->cfg)},
           {"num_groups", ctx->num_arms()},
           {"warnings", ctx->warnings}}};
}

json SessionService::query_payload(const Entry& e) const {
  const auto& s = *e.session;
  const Query& q = s.pending().front();
  const auto& record = (*pool_)[q.record];
  json p = {{"instance_id", record.id},
            {"group", q.group},
            {"group_name", e.ctx->arms.names[q.group]},
            {"predicted_class", pool_->predicted(q.record)},
            {"confidence", pool_->confidence(q.record)},
            {"scores", std::vector<double>(record.scores.data(), record.scores.data() + record.scores.size())},
            {"outcome_kind", to_string(e.ctx->cfg.outcome_kind)},
            {"step", s.steps().size() + 1}};
  if (const auto it = record.attributes.find("display_url"); it != record.attributes.end()) {
    p["display_url"] = it->second;
  }
  return p;
}

ServiceResponse SessionService::next(const std::string& id) {
  const auto e = find(id);
  if (!e) return error_response(404, "unknown session " + id);
  std::lock_guard lock(e->mu);
  auto& s = *e->session;
  if (s.pending().empty() && s.propose().empty()) {
    auto r = error_response(410, "session finished");
    r.body["terminal"] = to_string(*s.terminal());
    r.body["steps"] = s.steps().size();
    return r;
  }
  return {200, query_payload(*e)};
}

ServiceResponse SessionService::label(const std::string& id, const json& body) {
  const auto e = find(id);
  if (!e) return error_response(404, "unknown session " + id);
  if (!body.is_object() || !body.contains("instance_id") || !body.contains("outcome") ||
      !body.at("instance_id").is_string() || !body.at("outcome").is_number_integer()) {
    return error_response(400, "label body needs string instance_id and integer outcome");
  }
  const auto instance = body.at("instance_id").get<std::string>();
  const auto outcome = body.at("outcome").get<int>();

  std::lock_guard lock(e->mu);
  auto& s = *e->session;
  auto applied = [&](const Step& step, bool duplicate) {
    return ServiceResponse{200,
                           {{"step", step.i},
                            {"group", step.group},
                            {"instance_id", (*pool_)[step.record].id},
                            {"duplicate", duplicate},
                            {"posterior", arm_snapshot(*e->ctx, s.beliefs(), step.group)}}};
  };
  const bool matches_pending = !s.pending().empty() && (*pool_)[s.pending().front().record].id == instance;
  if (!matches_pending) {
    if (e->last_applied && (*pool_)[e->last_applied->record].id == instance && e->last_applied->z == outcome) {
      return applied(*e->last_applied, true);
    }
    return error_response(409, s.pending().empty() ? "no query is pending" : "instance " + instance + " is not the pending query");
  }
  const Query q = s.pending().front();
  try {
    arm_outcome(*e->ctx, q.record, outcome);
  } catch (const std::out_of_range& err) {
    return error_response(422, err.what());
  }
  s.observe(q, outcome);
  e->last_applied = s.steps().back();
  append_log(id, s.steps().back());
  return applied(s.steps().back(), false);
}

ServiceResponse SessionService::state(const std::string& id) {
  const auto e = find(id);
  if (!e) return error_response(404, "unknown session " + id);
  std::lock_guard lock(e->mu);
  const auto& s = *e->session;
  ReportOptions options;
  options.seed = e->ctx->cfg.seed;
  options.n_samples = e->ctx->cfg.strategy.n_samples;
  json r = build_report(*e->ctx, s.steps(), options);
  r["session"] = id;
  r["steps"] = s.steps().size();
  r["budget"] = e->ctx->cfg.budget ? json(*e->ctx->cfg.budget) : json("until-stopped");
  r["outcome_kind"] = to_string(e->ctx->cfg.outcome_kind);
  r["num_classes"] = pool_->num_classes();
  r["pending"] = s.pending().empty() ? json(nullptr) : query_payload(*e);
  r["terminal"] = s.terminal() ? json(to_string(*s.terminal())) : json(nullptr);
  return {200, std::move(r)};
}

struct HttpServer::Impl {
  httplib::Server server;
};

namespace {

void reply(httplib::Response& res, const ServiceResponse& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

}  // namespace

HttpServer::HttpServer(SessionService& service, std::string token) : impl_(std::make_unique<Impl>()) {
  auto& srv = impl_->server;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Authorization, Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  srv.set_pre_routing_handler([token](const httplib::Request& req, httplib::Response& res) {
    if (req.method == "OPTIONS") {
      res.status = 204;
      return httplib::Server::HandlerResponse::Handled;
    }
    if (!token.empty() && req.get_header_value("Authorization") != "Bearer " + token) {
      reply(res, error_response(401, "missing or wrong bearer token"));
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });
  auto parse_body = [](const httplib::Request& req, json& out) {
    if (req.body.empty()) {
      out = nullptr;
      return true;
    }
    try {
      out = json::parse(req.body);
      return true;
    } catch (const json::parse_error&) {
      return false;
    }
  };
  srv.Post("/sessions", [&service, parse_body](const httplib::Request& req, httplib::Response& res) {
    json body;
    if (!parse_body(req, body)) return reply(res, error_response(400, "body is not valid JSON"));
    reply(res, service.create(body));
  });
  srv.Get(R"(/sessions/([^/]+)/next)", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.next(req.matches[1]));
  });
  srv.Post(R"(/sessions/([^/]+)/label)", [&service, parse_body](const httplib::Request& req, httplib::Response& res) {
    json body;
    if (!parse_body(req, body)) return reply(res, error_response(400, "body is not valid JSON"));
    reply(res, service.label(req.matches[1], body));
  });
  srv.Get(R"(/sessions/([^/]+)/state)", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.state(req.matches[1]));
  });
  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    reply(res, error_response(500, message));
  });
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) reply(res, error_response(res.status, "no such endpoint"));
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace assay
