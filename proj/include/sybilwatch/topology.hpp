#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "sybilwatch/graph.hpp"
#include "sybilwatch/types.hpp"

namespace sybilwatch {

struct SybilEdge {
  AccountId a;  // a < b
  AccountId b;
  Timestamp created_at = 0;
  AccountId initiator;

  friend bool operator==(const SybilEdge&, const SybilEdge&) = default;
};

// Sybil-labelled accounts (including those with no Sybil friends) and the
// friendships between them. Nodes sorted by id, edges by (a, b).
struct SybilSubgraph {
  std::vector<AccountRecord> nodes;
  std::vector<SybilEdge> edges;

  friend bool operator==(const SybilSubgraph&, const SybilSubgraph&) = default;
};

// In strict mode every graph account needs a sybil/normal label
// (UnlabeledAccount otherwise); lenient mode treats missing or unknown
// labels as normal.
SybilSubgraph extract_sybil_subgraph(const SocialGraph& g, const LabelMap& labels,
                                     bool strict = true);

// Components as sorted member lists, ordered by size descending then by
// smallest member.
std::vector<std::vector<AccountId>> connected_components(const SybilSubgraph& sg);

// Fraction of Sybils with no Sybil friend; nullopt without Sybils.
std::optional<double> isolated_fraction(const SybilSubgraph& sg);

struct LoosenessThresholds {
  double density = 0.1;
  double clustering = 0.1;
};

struct ComponentStats {
  std::size_t size = 0;
  std::size_t edge_count = 0;
  std::optional<double> density;                // nullopt for singletons
  std::optional<double> mean_local_clustering;  // over members with degree >= 2
  bool loose = false;
  AccountId first_member{"?"};

  friend bool operator==(const ComponentStats&, const ComponentStats&) = default;
};

enum class EdgeFormation : std::uint8_t { incidental, deliberate };

struct BurstParams {
  std::uint64_t threshold = 10;
  Timestamp window_seconds = 300;
};

struct EdgeFormationResult {
  SybilEdge edge;
  EdgeFormation formation = EdgeFormation::deliberate;
  Timestamp request_ts = 0;
  std::uint64_t burst_count = 0;  // initiator's requests within +-window, inclusive
};

// Labels each Sybil-Sybil edge incidental when the request that created it
// was sent inside a burst: the initiator sent at least `threshold` requests
// within +-window of it. The originating request is the initiator's latest
// request_sent to the other endpoint at or before the edge time;
// MissingOriginEvent when there is none. Output follows sg.edges.
std::vector<EdgeFormationResult> classify_edge_formation(const SybilSubgraph& sg,
                                                         std::span<const Event> log,
                                                         const BurstParams& params = {});

struct TopologyReport {
  std::size_t total_sybils = 0;
  std::size_t sybil_edge_count = 0;
  std::size_t isolated_count = 0;
  std::optional<double> isolated_fraction;
  std::vector<ComponentStats> components;  // size descending
  std::size_t loose_component_count = 0;
  // Mean density over components of size >= 2, weighted by size.
  std::optional<double> size_weighted_mean_density;
  // Hour bucket of (edge time - later endpoint creation) -> edge count.
  std::map<std::int64_t, std::uint64_t> edge_time_gap_hours;
  // Set only when edge formations were supplied and there are Sybil edges.
  std::optional<double> incidental_edge_fraction;

  friend bool operator==(const TopologyReport&, const TopologyReport&) = default;
};

TopologyReport report(const SybilSubgraph& sg, const LoosenessThresholds& loose = {},
                      std::span<const EdgeFormationResult> formations = {});

}  // namespace sybilwatch
