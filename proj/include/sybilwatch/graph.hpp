#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "sybilwatch/types.hpp"

namespace sybilwatch {

// Dense index of an account inside one SocialGraph, assigned in insertion order.
using NodeId = std::uint32_t;

struct EdgeRecord {
  NodeId u = 0;
  NodeId v = 0;
  Timestamp created_at = 0;
  NodeId initiator = 0;
};

// Undirected accepted-friendship graph. Friendship direction is kept only as
// the edge initiator. Adjacency lists are kept sorted and per-node triangle
// counts are maintained on insertion, so local clustering is O(1).
//
// Single writer; concurrent const access is safe.
class SocialGraph {
 public:
  NodeId add_account(AccountRecord rec);

  void add_edge(const AccountId& u, const AccountId& v, Timestamp t, const AccountId& initiator);
  void add_edge(NodeId u, NodeId v, Timestamp t, NodeId initiator);

  // Throws the same errors add_edge would, without mutating anything.
  void check_edge(NodeId u, NodeId v, Timestamp t, NodeId initiator) const;

  std::optional<NodeId> find(const AccountId& id) const;
  NodeId require(const AccountId& id) const;  // MissingAccount if absent
  bool contains(const AccountId& id) const { return find(id).has_value(); }

  const AccountRecord& account(NodeId n) const { return accounts_[n]; }
  const std::vector<AccountRecord>& accounts() const noexcept { return accounts_; }

  std::vector<AccountId> neighbors(const AccountId& u) const;
  std::span<const NodeId> adjacent(NodeId n) const { return adjacency_[n]; }
  std::size_t degree(NodeId n) const { return adjacency_[n].size(); }
  std::size_t degree(const AccountId& u) const { return degree(require(u)); }

  bool has_edge(NodeId u, NodeId v) const;
  std::optional<EdgeRecord> edge(NodeId u, NodeId v) const;

  // Number of edges among the neighbours of n.
  std::uint64_t triangles(NodeId n) const { return triangles_[n]; }

  // 2T/(d(d-1)); nullopt when the degree is below 2.
  std::optional<double> local_clustering(NodeId n) const;
  std::optional<double> local_clustering(const AccountId& u) const {
    return local_clustering(require(u));
  }

  // Edges in insertion order.
  const std::vector<EdgeRecord>& edges() const noexcept { return edges_; }

  std::size_t account_count() const noexcept { return accounts_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  // Same accounts in the same order and the same edge set; edge insertion
  // order is ignored.
  friend bool operator==(const SocialGraph& a, const SocialGraph& b);

 private:
  static std::uint64_t pair_key(NodeId u, NodeId v) noexcept {
    if (u > v) std::swap(u, v);
    return (std::uint64_t{u} << 32) | v;
  }

  std::vector<AccountRecord> accounts_;
  std::unordered_map<AccountId, NodeId> index_;
  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<std::uint64_t> triangles_;
  std::vector<EdgeRecord> edges_;
  std::unordered_map<std::uint64_t, std::size_t> edge_index_;
};

// Graph of every account_created event and every accepted request in a log,
// applied in sequence order. Event labels, when present, are kept.
SocialGraph graph_from_events(std::span<const Event> events);

// Local clustering from a degree and triangle count, shared by every caller
// so that independently counted triangles produce bit-identical values.
inline std::optional<double> clustering_coefficient(std::uint64_t degree, std::uint64_t triangles) {
  if (degree < 2) return std::nullopt;
  return 2.0 * static_cast<double>(triangles) /
         (static_cast<double>(degree) * static_cast<double>(degree - 1));
}

}  // namespace sybilwatch
