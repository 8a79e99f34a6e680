#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "sybilwatch/detector.hpp"
#include "sybilwatch/simulator.hpp"
#include "sybilwatch/topology.hpp"

namespace sybilwatch {

// Everything the CLI and service can be configured with.
//
// On disk this is a flat `key = value` document (INI syntax without
// sections, `#` or `;` comments). Keys mirror the struct fields:
//
//   n_normal, n_sybil, duration_hours, normal_invite_rate,
//   sybil_invite_rate, accept_prob_normal_from_normal,
//   accept_prob_normal_from_sybil, sybil_accept_prob,
//   sybil_target_sybil_prob, popularity_exponent, sybil_burst_size,
//   sybil_burst_span_seconds, mean_response_delay_hours, seed
//   rules            comma-separated, e.g. "invite_rate > 10, local_clustering < 0.05"
//   min_matches, evaluation_trigger, window_seconds, min_sent
//   burst_threshold, burst_window_seconds, loose_density, loose_clustering
//   strict           true/false
struct AppConfig {
  SimConfig sim;
  ClassifierConfig classifier = ClassifierConfig::defaults();
  BurstParams burst;
  LoosenessThresholds loose;
  bool strict = false;
};

// InvalidConfig on unknown keys, sections or unparsable values.
AppConfig parse_config(const std::map<std::string, std::string>& kv);
AppConfig load_config(const std::filesystem::path& path);
std::string render_config(const AppConfig& cfg);

// FNV-1a over the rendered classifier settings; stored in checkpoints.
std::uint64_t config_hash(const ClassifierConfig& cfg);

}  // namespace sybilwatch
