#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sybilwatch/graph.hpp"
#include "sybilwatch/types.hpp"

namespace sybilwatch {

enum class Feature : std::uint8_t {
  invite_rate,
  outgoing_accept_ratio,
  incoming_request_count,
  local_clustering,
  outgoing_sent_total,
};

inline constexpr Feature kAllFeatures[] = {
    Feature::invite_rate, Feature::outgoing_accept_ratio, Feature::incoming_request_count,
    Feature::local_clustering, Feature::outgoing_sent_total};

std::string_view to_string(Feature f) noexcept;
std::optional<Feature> parse_feature(std::string_view name) noexcept;

struct FeatureVector {
  double invite_rate = 0.0;  // requests per hour over the trailing window
  std::optional<double> outgoing_accept_ratio;
  std::uint64_t incoming_request_count = 0;  // over the trailing window
  std::optional<double> local_clustering;
  std::uint64_t outgoing_sent_total = 0;

  std::optional<double> value(Feature f) const noexcept;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct FeatureConfig {
  Timestamp window_seconds = kSecondsPerHour;
  std::uint64_t min_sent = 5;  // the accept ratio is undefined below this

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

// Nodes touched by one applied event.
struct AppliedEvent {
  NodeId actor = 0;
  std::optional<NodeId> target;
};

// Per-account behavioural state, updated one event at a time.
//
// Rings of recent outgoing and incoming request times are trimmed to the
// window on every touch; counters are lifetime. Accepted requests are added
// to the friendship graph as they are applied, so clustering is never stale.
// Events must arrive in non-decreasing timestamp order (OutOfOrderEvent).
// A failing event leaves the state untouched.
class FeatureState {
 public:
  explicit FeatureState(FeatureConfig cfg = {});

  AppliedEvent apply_event(const Event& e);

  FeatureVector snapshot(const AccountId& u, Timestamp now) const;
  FeatureVector snapshot(NodeId u, Timestamp now) const;

  const FeatureConfig& config() const noexcept { return cfg_; }
  const SocialGraph& graph() const noexcept { return graph_; }
  std::optional<NodeId> find(const AccountId& id) const { return graph_.find(id); }
  std::optional<Timestamp> last_applied_ts() const noexcept { return last_ts_; }
  std::uint64_t accepted_total(NodeId u) const { return accounts_[u].accepted_total; }

  friend bool operator==(const FeatureState&, const FeatureState&) = default;

 private:
  friend struct StateCodec;

  struct AccountState {
    std::deque<Timestamp> outgoing;
    std::deque<Timestamp> incoming;
    std::uint64_t sent_total = 0;
    std::uint64_t accepted_total = 0;

    friend bool operator==(const AccountState&, const AccountState&) = default;
  };

  static std::uint64_t directed_key(NodeId from, NodeId to) noexcept {
    return (std::uint64_t{from} << 32) | to;
  }

  NodeId known(const AccountId& id) const;
  void evict(std::deque<Timestamp>& ring, Timestamp now) const;

  FeatureConfig cfg_;
  SocialGraph graph_;
  std::vector<AccountState> accounts_;
  // Outstanding requests keyed by (from, to), with multiplicity.
  std::unordered_map<std::uint64_t, std::uint32_t> pending_;
  std::optional<Timestamp> last_ts_;
};

}  // namespace sybilwatch
