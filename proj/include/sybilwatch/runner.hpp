#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "sybilwatch/detector.hpp"
#include "sybilwatch/wire.hpp"

namespace sybilwatch {

struct DetectOptions {
  std::filesystem::path log;
  std::filesystem::path out_dir;
  bool strict = false;
  // Stop after this many events (counted over the whole sorted log) and
  // write a checkpoint to checkpoint_path.
  std::optional<std::uint64_t> checkpoint_after;
  std::optional<std::filesystem::path> checkpoint_path;
  // Continue from a checkpoint; the verdict file in out_dir must hold
  // exactly the lines the checkpoint recorded.
  std::optional<std::filesystem::path> resume_from;
};

struct DetectMetrics {
  std::uint64_t events_total = 0;      // ingested
  std::uint64_t events_processed = 0;  // by this run
  std::uint64_t skipped_lines = 0;
  std::uint64_t verdicts = 0;  // written by this run
  std::uint64_t sybil_verdicts = 0;
  std::uint64_t benign_verdicts = 0;
  std::uint64_t bans = 0;  // total, including restored ones
  std::uint64_t classify_calls = 0;
  double ingest_seconds = 0.0;
  double process_seconds = 0.0;  // feature updates + classification only
  double output_seconds = 0.0;
  double events_per_second = 0.0;  // events_processed / process_seconds
  double classify_per_second = 0.0;
  std::uint64_t peak_rss_kb = 0;
  bool checkpointed = false;
};

inline constexpr const char* kVerdictFile = "verdicts.jsonl";
inline constexpr const char* kBanFile = "bans.jsonl";
inline constexpr const char* kMetricsFile = "metrics.json";

// Ingests the log, runs the detector, and atomically writes verdicts.jsonl,
// bans.jsonl and metrics.json into out_dir.
DetectMetrics run_detect(const DetectOptions& options, const ClassifierConfig& cfg);

Json metrics_to_json(const DetectMetrics& m);

// Peak resident set size of this process (VmHWM), 0 when unavailable.
std::uint64_t peak_rss_kb();

}  // namespace sybilwatch
