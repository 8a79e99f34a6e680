#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sybilwatch/detector.hpp"
#include "sybilwatch/simulator.hpp"
#include "sybilwatch/topology.hpp"
#include "sybilwatch/types.hpp"

namespace sybilwatch {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// Event log lines:
//   {"type":"account_created","ts":0,"id":"u1"[,"label":"sybil"]}
//   {"type":"request_sent","ts":12,"from":"u1","to":"u2"}
// Unknown keys are ignored. MalformedEvent on anything else.
std::string encode_event(const Event& e);
Event decode_event(std::string_view line);

struct IngestIssue {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct IngestResult {
  std::vector<Event> events;  // sorted by (ts, line)
  std::size_t skipped = 0;
  std::vector<IngestIssue> issues;
};

// Strict mode throws ParseError at the first bad line; lenient mode skips
// and records it. Blank lines count as bad lines.
IngestResult ingest(std::istream& in, bool strict);
IngestResult ingest_file(const std::filesystem::path& path, bool strict);

void write_event_log(std::ostream& out, std::span<const Event> events);

// account_created records carrying labels, followed by one
//   {"type":"sybil_edge","a":..,"b":..,"origin":"intentional"|"accidental"}
// line per Sybil-Sybil friendship.
void write_ground_truth(std::ostream& out, const SimOutput& sim);
GroundTruth read_ground_truth(const std::filesystem::path& path);

Json feature_vector_to_json(const FeatureVector& fv);
FeatureVector feature_vector_from_json(const Json& j);

std::string encode_verdict(const Verdict& v);
Verdict decode_verdict(std::string_view line);
Json verdict_to_json(const Verdict& v);
Verdict verdict_from_json(const Json& j);

std::string encode_ban(const Ban& b);
Ban decode_ban(std::string_view line);
std::vector<Ban> read_bans(const std::filesystem::path& path);

Json report_to_json(const TopologyReport& r);
TopologyReport report_from_json(const Json& j);

// Writes to a sibling temporary file and renames it over the target on
// commit(). An uncommitted writer removes its temporary file.
class AtomicFileWriter {
 public:
  explicit AtomicFileWriter(std::filesystem::path target);
  ~AtomicFileWriter();
  AtomicFileWriter(const AtomicFileWriter&) = delete;
  AtomicFileWriter& operator=(const AtomicFileWriter&) = delete;

  std::ostream& stream() { return out_; }
  void commit();

 private:
  std::filesystem::path target_;
  std::filesystem::path temp_;
  std::ofstream out_;
  bool committed_ = false;
};

void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace sybilwatch
