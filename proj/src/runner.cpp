#include "sybilwatch/runner.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "sybilwatch/checkpoint.hpp"
#include "sybilwatch/config.hpp"
#include "sybilwatch/error.hpp"

namespace sybilwatch {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

std::uint64_t peak_rss_kb() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      std::istringstream ss(line.substr(6));
      std::uint64_t kb = 0;
      ss >> kb;
      return kb;
    }
  }
  return 0;
}

Json metrics_to_json(const DetectMetrics& m) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["events_total"] = m.events_total;
  j["events_processed"] = m.events_processed;
  j["skipped_lines"] = m.skipped_lines;
  j["verdicts"] = m.verdicts;
  j["sybil_verdicts"] = m.sybil_verdicts;
  j["benign_verdicts"] = m.benign_verdicts;
  j["bans"] = m.bans;
  j["classify_calls"] = m.classify_calls;
  j["ingest_seconds"] = m.ingest_seconds;
  j["process_seconds"] = m.process_seconds;
  j["output_seconds"] = m.output_seconds;
  j["events_per_second"] = m.events_per_second;
  j["classify_per_second"] = m.classify_per_second;
  j["peak_rss_kb"] = m.peak_rss_kb;
  j["checkpointed"] = m.checkpointed;
  return j;
}

DetectMetrics run_detect(const DetectOptions& options, const ClassifierConfig& cfg) {
  cfg.validate();
  if (options.checkpoint_after && !options.checkpoint_path) {
    throw Error(Errc::invalid_config, "checkpoint_after needs a checkpoint path");
  }
  DetectMetrics metrics;
  std::filesystem::create_directories(options.out_dir);
  const auto verdict_path = options.out_dir / kVerdictFile;

  auto t0 = Clock::now();
  IngestResult input = ingest_file(options.log, options.strict);
  metrics.ingest_seconds = seconds_since(t0);
  metrics.events_total = input.events.size();
  metrics.skipped_lines = input.skipped;

  std::uint64_t start = 0;
  std::uint64_t prior_verdict_lines = 0;
  std::optional<StreamDetector> detector;
  if (options.resume_from) {
    auto loaded = load_checkpoint(*options.resume_from, cfg);
    start = loaded.meta.events_applied;
    prior_verdict_lines = loaded.meta.verdict_lines;
    if (start > input.events.size() ||
        (start > 0 && input.events[start - 1].ts != loaded.meta.last_applied_ts)) {
      throw Error(Errc::checkpoint_mismatch, "checkpoint does not line up with " + options.log.string());
    }
    detector.emplace(std::move(loaded.detector));
  } else {
    detector.emplace(cfg);
  }

  std::uint64_t stop = input.events.size();
  if (options.checkpoint_after) stop = std::min<std::uint64_t>(stop, *options.checkpoint_after);
  if (stop < start) throw Error(Errc::invalid_config, "checkpoint_after precedes the resume point");

  // Processing is timed on its own; verdicts are buffered and serialised after.
  std::vector<Verdict> verdicts;
  t0 = Clock::now();
  const auto calls_before = detector->classify_calls();
  for (std::uint64_t i = start; i < stop; ++i) {
    try {
      detector->process(input.events[i], verdicts);
    } catch (const Error& e) {
      throw Error(e.code(), "event " + std::to_string(i + 1) + " of sorted log: " + e.what());
    }
  }
  metrics.process_seconds = seconds_since(t0);
  metrics.events_processed = stop - start;
  metrics.classify_calls = detector->classify_calls() - calls_before;
  if (metrics.process_seconds > 0) {
    metrics.events_per_second = static_cast<double>(metrics.events_processed) / metrics.process_seconds;
    metrics.classify_per_second = static_cast<double>(metrics.classify_calls) / metrics.process_seconds;
  }

  t0 = Clock::now();
  {
    AtomicFileWriter out(verdict_path);
    if (options.resume_from) {
      std::ifstream prior(verdict_path);
      if (!prior) throw Error(Errc::checkpoint_mismatch, "missing " + verdict_path.string() + " to resume");
      std::string line;
      std::uint64_t copied = 0;
      while (copied < prior_verdict_lines && std::getline(prior, line)) {
        out.stream() << line << '\n';
        ++copied;
      }
      if (copied != prior_verdict_lines || std::getline(prior, line)) {
        throw Error(Errc::checkpoint_mismatch, verdict_path.string() + " does not hold " +
                                                   std::to_string(prior_verdict_lines) + " lines");
      }
    }
    for (const auto& v : verdicts) {
      out.stream() << encode_verdict(v) << '\n';
      ++(v.decision == Decision::sybil ? metrics.sybil_verdicts : metrics.benign_verdicts);
    }
    out.commit();
  }
  metrics.verdicts = verdicts.size();
  {
    AtomicFileWriter out(options.out_dir / kBanFile);
    for (const auto& b : detector->bans()) out.stream() << encode_ban(b) << '\n';
    out.commit();
  }
  metrics.bans = detector->bans().size();

  if (options.checkpoint_after && stop < input.events.size()) {
    CheckpointMeta meta;
    meta.events_applied = stop;
    meta.last_applied_ts = stop > 0 ? input.events[stop - 1].ts : 0;
    meta.config_hash = config_hash(cfg);
    meta.verdict_lines = prior_verdict_lines + verdicts.size();
    save_checkpoint(*options.checkpoint_path, *detector, meta);
    metrics.checkpointed = true;
  }
  metrics.output_seconds = seconds_since(t0);
  metrics.peak_rss_kb = peak_rss_kb();
  write_file_atomic(options.out_dir / kMetricsFile, metrics_to_json(metrics).dump(2) + "\n");
  return metrics;
}

}  // namespace sybilwatch
