#pragma once

#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "sybilwatch/config.hpp"
#include "sybilwatch/detector.hpp"

namespace httplib {
class Server;
}

namespace sybilwatch {

struct ServiceResponse {
  int status = 200;
  std::string body;  // JSON, always with schema_version
};

// HTTP scoring service state. Handlers are plain methods so they can be
// exercised without a socket; mount() wires them to an httplib::Server.
//
//   POST /v1/events                  JSON-lines batch; 202 + per-line report
//   GET  /v1/accounts/{id}/features  current FeatureVector
//   GET  /v1/accounts/{id}/verdict   latest Verdict (null if never evaluated)
//   GET  /v1/stats/topology          TopologyReport over verdict labels
//   GET  /v1/healthz                 200 + last_applied_ts
//
// Writes are serialised; reads share a lock and never block each other.
class DetectionService {
 public:
  explicit DetectionService(AppConfig cfg);

  // 400 when the body has unparsable lines in strict mode, 409 when it
  // reaches behind the last applied timestamp in strict mode. Lenient mode
  // skips such lines and reports them. Each batch is applied in (ts, line)
  // order; events the feature layer rejects are reported and skipped.
  ServiceResponse post_events(std::string_view body);
  ServiceResponse features(const std::string& id) const;
  ServiceResponse verdict(const std::string& id) const;
  ServiceResponse topology() const;
  ServiceResponse healthz() const;

  void mount(httplib::Server& server);

 private:
  AppConfig cfg_;
  mutable std::shared_mutex mu_;
  StreamDetector detector_;
  std::vector<Event> requests_;  // request_sent history for edge-formation analysis
};

// Blocks serving on host:port until the process is stopped.
void serve(const AppConfig& cfg, const std::string& host, int port);

}  // namespace sybilwatch
