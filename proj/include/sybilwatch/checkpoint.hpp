#pragma once

#include <cstdint>
#include <filesystem>

#include "sybilwatch/detector.hpp"
#include "sybilwatch/wire.hpp"

namespace sybilwatch {

inline constexpr int kCheckpointFormatVersion = 1;

struct CheckpointMeta {
  std::uint64_t events_applied = 0;  // position in the sorted log
  Timestamp last_applied_ts = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t verdict_lines = 0;  // lines already in the verdict file
};

struct LoadedCheckpoint {
  CheckpointMeta meta;
  StreamDetector detector;
};

// Structured-text checkpoint (JSON) of the full detector state: accounts,
// edges in insertion order, feature rings and counters, pending requests,
// bans and latest verdicts.
Json checkpoint_to_json(const StreamDetector& detector, const CheckpointMeta& meta);

// UnsupportedCheckpoint for an unknown format_version; CheckpointMismatch
// when the stored config hash differs from `cfg`.
LoadedCheckpoint checkpoint_from_json(const Json& j, const ClassifierConfig& cfg);

void save_checkpoint(const std::filesystem::path& path, const StreamDetector& detector,
                     const CheckpointMeta& meta);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const ClassifierConfig& cfg);

}  // namespace sybilwatch
