#include "sybilwatch/graph.hpp"

#include <algorithm>

#include "sybilwatch/error.hpp"

namespace sybilwatch {

NodeId SocialGraph::add_account(AccountRecord rec) {
  if (index_.contains(rec.id)) {
    throw Error(Errc::duplicate_account, rec.id.str());
  }
  if (rec.created_at < 0) {
    throw Error(Errc::invalid_config, "negative creation time for " + rec.id.str());
  }
  const auto n = static_cast<NodeId>(accounts_.size());
  index_.emplace(rec.id, n);
  accounts_.push_back(std::move(rec));
  adjacency_.emplace_back();
  triangles_.push_back(0);
  return n;
}

std::optional<NodeId> SocialGraph::find(const AccountId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeId SocialGraph::require(const AccountId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(Errc::missing_account, id.str());
  return it->second;
}

void SocialGraph::add_edge(const AccountId& u, const AccountId& v, Timestamp t,
                           const AccountId& initiator) {
  if (u == v) throw Error(Errc::self_loop, u.str());
  add_edge(require(u), require(v), t, require(initiator));
}

void SocialGraph::check_edge(NodeId u, NodeId v, Timestamp t, NodeId initiator) const {
  if (u >= accounts_.size() || v >= accounts_.size()) {
    throw Error(Errc::missing_account, "node index out of range");
  }
  if (u == v) throw Error(Errc::self_loop, accounts_[u].id.str());
  if (initiator != u && initiator != v) {
    throw Error(Errc::missing_account, "initiator " + accounts_[initiator].id.str() +
                                           " is not an endpoint");
  }
  if (edge_index_.contains(pair_key(u, v))) {
    throw Error(Errc::duplicate_edge, accounts_[u].id.str() + " - " + accounts_[v].id.str());
  }
  if (t < accounts_[u].created_at || t < accounts_[v].created_at) {
    throw Error(Errc::time_before_creation, accounts_[u].id.str() + " - " +
                                                accounts_[v].id.str() + " at " +
                                                std::to_string(t));
  }
}

void SocialGraph::add_edge(NodeId u, NodeId v, Timestamp t, NodeId initiator) {
  check_edge(u, v, t, initiator);

  // Every common neighbour closes a new triangle with (u, v).
  const auto& au = adjacency_[u];
  const auto& av = adjacency_[v];
  const auto& small = au.size() <= av.size() ? au : av;
  const auto& large = au.size() <= av.size() ? av : au;
  std::uint64_t common = 0;
  for (NodeId w : small) {
    if (std::binary_search(large.begin(), large.end(), w)) {
      ++triangles_[w];
      ++common;
    }
  }
  triangles_[u] += common;
  triangles_[v] += common;

  auto insert_sorted = [](std::vector<NodeId>& list, NodeId n) {
    list.insert(std::upper_bound(list.begin(), list.end(), n), n);
  };
  insert_sorted(adjacency_[u], v);
  insert_sorted(adjacency_[v], u);

  edge_index_.emplace(pair_key(u, v), edges_.size());
  edges_.push_back(EdgeRecord{u, v, t, initiator});
}

std::vector<AccountId> SocialGraph::neighbors(const AccountId& u) const {
  std::vector<AccountId> out;
  for (NodeId n : adjacency_[require(u)]) out.push_back(accounts_[n].id);
  std::sort(out.begin(), out.end());
  return out;
}

bool SocialGraph::has_edge(NodeId u, NodeId v) const {
  return edge_index_.contains(pair_key(u, v));
}

std::optional<EdgeRecord> SocialGraph::edge(NodeId u, NodeId v) const {
  auto it = edge_index_.find(pair_key(u, v));
  if (it == edge_index_.end()) return std::nullopt;
  return edges_[it->second];
}

std::optional<double> SocialGraph::local_clustering(NodeId n) const {
  return clustering_coefficient(adjacency_[n].size(), triangles_[n]);
}

SocialGraph graph_from_events(std::span<const Event> events) {
  SocialGraph g;
  for (const auto& e : events) {
    if (e.type == EventType::account_created) {
      g.add_account(AccountRecord{e.actor, e.ts, e.label.value_or(Label::unknown)});
    } else if (e.type == EventType::request_accepted) {
      g.add_edge(e.actor, *e.target, e.ts, e.actor);
    }
  }
  return g;
}

bool operator==(const SocialGraph& a, const SocialGraph& b) {
  if (a.accounts_ != b.accounts_ || a.edges_.size() != b.edges_.size()) return false;
  if (a.adjacency_ != b.adjacency_ || a.triangles_ != b.triangles_) return false;
  for (const auto& e : a.edges_) {
    auto other = b.edge(e.u, e.v);
    if (!other || other->created_at != e.created_at || other->initiator != e.initiator) {
      return false;
    }
  }
  return true;
}

}  // namespace sybilwatch
