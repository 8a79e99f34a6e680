#include "sybilwatch/service.hpp"

#include <algorithm>
#include <mutex>

#include <httplib.h>

#include "sybilwatch/error.hpp"
#include "sybilwatch/topology.hpp"
#include "sybilwatch/wire.hpp"

namespace sybilwatch {

namespace {

ServiceResponse respond(int status, Json body) {
  Json out;
  out["schema_version"] = kSchemaVersion;
  for (auto& [k, v] : body.items()) {
    if (k != "schema_version") out[k] = v;
  }
  return ServiceResponse{status, out.dump()};
}

ServiceResponse error_response(int status, const std::string& message) {
  Json j;
  j["error"] = message;
  return respond(status, std::move(j));
}

Json issue_json(std::size_t line, const std::string& message) {
  Json j;
  j["line"] = line;
  j["error"] = message;
  return j;
}

}  // namespace

DetectionService::DetectionService(AppConfig cfg)
    : cfg_(std::move(cfg)), detector_(cfg_.classifier) {}

ServiceResponse DetectionService::post_events(std::string_view body) {
  struct Parsed {
    std::size_t line;
    Event event;
  };
  std::vector<Parsed> parsed;
  Json rejected = Json::array();

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto end = body.find('\n', pos);
    if (end == std::string_view::npos) end = body.size();
    auto line = body.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      parsed.push_back(Parsed{line_no, decode_event(line)});
    } catch (const Error& e) {
      rejected.push_back(issue_json(line_no, e.what()));
    }
  }
  if (cfg_.strict && !rejected.empty()) {
    Json j;
    j["error"] = "malformed lines";
    j["rejected"] = std::move(rejected);
    return respond(400, std::move(j));
  }
  std::stable_sort(parsed.begin(), parsed.end(),
                   [](const Parsed& a, const Parsed& b) { return a.event.ts < b.event.ts; });

  std::unique_lock lock(mu_);
  const auto last = detector_.features().last_applied_ts();
  if (last) {
    auto stale = std::find_if(parsed.begin(), parsed.end(),
                              [&](const Parsed& p) { return p.event.ts >= *last; });
    if (stale != parsed.begin()) {
      if (cfg_.strict) {
        Json j;
        j["error"] = "batch reaches behind last_applied_ts";
        j["last_applied_ts"] = *last;
        return respond(409, std::move(j));
      }
      for (auto it = parsed.begin(); it != stale; ++it) {
        rejected.push_back(issue_json(it->line, "OutOfOrderEvent: ts before last_applied_ts"));
      }
      parsed.erase(parsed.begin(), stale);
    }
  }

  std::vector<Verdict> verdicts;
  std::size_t accepted = 0;
  for (const auto& p : parsed) {
    try {
      detector_.process(p.event, verdicts);
      ++accepted;
      if (p.event.type == EventType::request_sent) requests_.push_back(p.event);
    } catch (const Error& e) {
      rejected.push_back(issue_json(p.line, e.what()));
    }
  }

  Json j;
  j["accepted"] = accepted;
  j["rejected"] = std::move(rejected);
  j["verdicts"] = verdicts.size();
  j["sybil_verdicts"] = std::count_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) {
    return v.decision == Decision::sybil;
  });
  const auto now = detector_.features().last_applied_ts();
  j["last_applied_ts"] = now.value_or(0);
  return respond(202, std::move(j));
}

ServiceResponse DetectionService::features(const std::string& id) const {
  if (!AccountId::is_valid(id)) return error_response(404, "unknown account");
  std::shared_lock lock(mu_);
  const auto& fs = detector_.features();
  auto n = fs.find(AccountId(id));
  if (!n) return error_response(404, "unknown account " + id);
  const Timestamp now = fs.last_applied_ts().value_or(0);
  Json j;
  j["account"] = id;
  j["at"] = now;
  j["features"] = feature_vector_to_json(fs.snapshot(*n, now));
  return respond(200, std::move(j));
}

ServiceResponse DetectionService::verdict(const std::string& id) const {
  if (!AccountId::is_valid(id)) return error_response(404, "unknown account");
  std::shared_lock lock(mu_);
  auto n = detector_.features().find(AccountId(id));
  if (!n) return error_response(404, "unknown account " + id);
  Json j;
  j["account"] = id;
  j["banned"] = detector_.is_banned(*n);
  const auto& latest = detector_.latest_verdict(*n);
  j["verdict"] = latest ? verdict_to_json(*latest) : Json(nullptr);
  return respond(200, std::move(j));
}

ServiceResponse DetectionService::topology() const {
  std::shared_lock lock(mu_);
  const auto& g = detector_.features().graph();
  LabelMap labels;
  labels.reserve(g.account_count());
  for (NodeId n = 0; n < g.account_count(); ++n) {
    labels.emplace(g.account(n).id, detector_.is_banned(n) ? Label::sybil : Label::normal);
  }
  const auto sg = extract_sybil_subgraph(g, labels);
  const auto formations = classify_edge_formation(sg, requests_, cfg_.burst);
  return respond(200, report_to_json(report(sg, cfg_.loose, formations)));
}

ServiceResponse DetectionService::healthz() const {
  std::shared_lock lock(mu_);
  Json j;
  j["status"] = "ok";
  j["last_applied_ts"] = detector_.features().last_applied_ts().value_or(0);
  j["events_applied"] = detector_.events_applied();
  return respond(200, std::move(j));
}

void DetectionService::mount(httplib::Server& server) {
  auto send = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server.Post("/v1/events", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, post_events(req.body));
  });
  server.Get(R"(/v1/accounts/([^/]+)/features)",
             [this, send](const httplib::Request& req, httplib::Response& res) {
               send(res, features(req.matches[1]));
             });
  server.Get(R"(/v1/accounts/([^/]+)/verdict)",
             [this, send](const httplib::Request& req, httplib::Response& res) {
               send(res, verdict(req.matches[1]));
             });
  server.Get("/v1/stats/topology", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, topology());
  });
  server.Get("/v1/healthz", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, healthz());
  });
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      Json j;
      j["schema_version"] = kSchemaVersion;
      j["error"] = "not found";
      res.set_content(j.dump(), "application/json");
    }
  });
}

void serve(const AppConfig& cfg, const std::string& host, int port) {
  DetectionService service(cfg);
  httplib::Server server;
  service.mount(server);
  if (!server.listen(host, port)) {
    throw Error(Errc::io_error, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace sybilwatch
