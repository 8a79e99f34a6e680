#include "sybilwatch/topology.hpp"

#include <algorithm>
#include <tuple>
#include <unordered_map>

#include "sybilwatch/error.hpp"
#include "sybilwatch/union_find.hpp"

namespace sybilwatch {

namespace {

std::unordered_map<AccountId, std::size_t> node_index(const SybilSubgraph& sg) {
  std::unordered_map<AccountId, std::size_t> index;
  index.reserve(sg.nodes.size());
  for (std::size_t i = 0; i < sg.nodes.size(); ++i) index.emplace(sg.nodes[i].id, i);
  return index;
}

// Component membership as node indices, canonically ordered.
std::vector<std::vector<std::size_t>> component_indices(const SybilSubgraph& sg) {
  const auto index = node_index(sg);
  UnionFind uf(sg.nodes.size());
  for (const auto& e : sg.edges) uf.unite(index.at(e.a), index.at(e.b));

  std::unordered_map<std::size_t, std::size_t> slot;
  std::vector<std::vector<std::size_t>> groups;
  // Nodes are sorted by id, so each group is sorted and its first member is
  // its smallest.
  for (std::size_t i = 0; i < sg.nodes.size(); ++i) {
    auto [it, fresh] = slot.try_emplace(uf.find(i), groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  std::stable_sort(groups.begin(), groups.end(),
                   [](const auto& x, const auto& y) { return x.size() > y.size(); });
  return groups;
}

}  // namespace

SybilSubgraph extract_sybil_subgraph(const SocialGraph& g, const LabelMap& labels, bool strict) {
  std::vector<bool> sybil(g.account_count(), false);
  SybilSubgraph sg;
  for (NodeId n = 0; n < g.account_count(); ++n) {
    const auto& rec = g.account(n);
    auto it = labels.find(rec.id);
    if (it == labels.end() || it->second == Label::unknown) {
      if (strict) throw Error(Errc::unlabeled_account, rec.id.str());
      continue;
    }
    if (it->second == Label::sybil) {
      sybil[n] = true;
      sg.nodes.push_back(AccountRecord{rec.id, rec.created_at, Label::sybil});
    }
  }
  for (const auto& e : g.edges()) {
    if (!sybil[e.u] || !sybil[e.v]) continue;
    const auto& a = g.account(e.u).id;
    const auto& b = g.account(e.v).id;
    sg.edges.push_back(SybilEdge{std::min(a, b), std::max(a, b), e.created_at,
                                 g.account(e.initiator).id});
  }
  std::sort(sg.nodes.begin(), sg.nodes.end(),
            [](const auto& x, const auto& y) { return x.id < y.id; });
  std::sort(sg.edges.begin(), sg.edges.end(), [](const auto& x, const auto& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  return sg;
}

std::vector<std::vector<AccountId>> connected_components(const SybilSubgraph& sg) {
  std::vector<std::vector<AccountId>> out;
  for (const auto& group : component_indices(sg)) {
    auto& members = out.emplace_back();
    members.reserve(group.size());
    for (auto i : group) members.push_back(sg.nodes[i].id);
  }
  return out;
}

std::optional<double> isolated_fraction(const SybilSubgraph& sg) {
  if (sg.nodes.empty()) return std::nullopt;
  std::vector<bool> touched(sg.nodes.size(), false);
  const auto index = node_index(sg);
  for (const auto& e : sg.edges) touched[index.at(e.a)] = touched[index.at(e.b)] = true;
  const auto isolated = std::count(touched.begin(), touched.end(), false);
  return static_cast<double>(isolated) / static_cast<double>(sg.nodes.size());
}

std::vector<EdgeFormationResult> classify_edge_formation(const SybilSubgraph& sg,
                                                         std::span<const Event> log,
                                                         const BurstParams& params) {
  struct Sent {
    Timestamp ts;
    const AccountId* to;
  };
  std::unordered_map<AccountId, std::vector<Sent>> sends;
  for (const auto& e : sg.edges) sends.try_emplace(e.initiator);
  for (const auto& e : log) {
    if (e.type != EventType::request_sent) continue;
    auto it = sends.find(e.actor);
    if (it != sends.end()) it->second.push_back(Sent{e.ts, &*e.target});
  }

  std::unordered_map<AccountId, std::vector<Timestamp>> times;
  for (const auto& [who, list] : sends) {
    auto& t = times[who];
    t.reserve(list.size());
    for (const auto& s : list) t.push_back(s.ts);
    std::sort(t.begin(), t.end());
  }

  std::vector<EdgeFormationResult> out;
  out.reserve(sg.edges.size());
  for (const auto& edge : sg.edges) {
    const auto& other = edge.initiator == edge.a ? edge.b : edge.a;
    std::optional<Timestamp> origin;
    for (const auto& s : sends.at(edge.initiator)) {
      if (*s.to == other && s.ts <= edge.created_at && (!origin || s.ts > *origin)) origin = s.ts;
    }
    if (!origin) {
      throw Error(Errc::missing_origin_event,
                  "no request_sent " + edge.initiator.str() + " -> " + other.str());
    }
    const auto& t = times.at(edge.initiator);
    const auto lo = std::lower_bound(t.begin(), t.end(), *origin - params.window_seconds);
    const auto hi = std::upper_bound(t.begin(), t.end(), *origin + params.window_seconds);
    const auto count = static_cast<std::uint64_t>(hi - lo);
    out.push_back(EdgeFormationResult{
        edge, count >= params.threshold ? EdgeFormation::incidental : EdgeFormation::deliberate,
        *origin, count});
  }
  return out;
}

TopologyReport report(const SybilSubgraph& sg, const LoosenessThresholds& loose,
                      std::span<const EdgeFormationResult> formations) {
  TopologyReport r;
  r.total_sybils = sg.nodes.size();
  r.sybil_edge_count = sg.edges.size();

  // The subgraph as a SocialGraph gives per-node clustering within it.
  SocialGraph local;
  for (const auto& n : sg.nodes) local.add_account(n);
  for (const auto& e : sg.edges) {
    local.add_edge(local.require(e.a), local.require(e.b), e.created_at,
                   local.require(e.initiator));
  }

  const auto index = node_index(sg);
  std::vector<std::size_t> component_of(sg.nodes.size());
  const auto groups = component_indices(sg);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    for (auto i : groups[c]) component_of[i] = c;
  }
  std::vector<std::size_t> edges_in(groups.size(), 0);
  for (const auto& e : sg.edges) ++edges_in[component_of[index.at(e.a)]];

  double weighted_density = 0.0;
  std::size_t weight = 0;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    const auto& group = groups[c];
    ComponentStats stats;
    stats.size = group.size();
    stats.edge_count = edges_in[c];
    stats.first_member = sg.nodes[group.front()].id;
    if (stats.size >= 2) {
      const auto n = static_cast<double>(stats.size);
      stats.density = 2.0 * static_cast<double>(stats.edge_count) / (n * (n - 1.0));
      double sum = 0.0;
      std::size_t defined = 0;
      for (auto i : group) {
        if (auto cc = local.local_clustering(static_cast<NodeId>(i))) {
          sum += *cc;
          ++defined;
        }
      }
      if (defined > 0) stats.mean_local_clustering = sum / static_cast<double>(defined);
      stats.loose = *stats.density < loose.density &&
                    stats.mean_local_clustering.value_or(0.0) < loose.clustering;
      weighted_density += n * *stats.density;
      weight += stats.size;
    } else {
      ++r.isolated_count;
    }
    if (stats.loose) ++r.loose_component_count;
    r.components.push_back(std::move(stats));
  }
  if (r.total_sybils > 0) {
    r.isolated_fraction =
        static_cast<double>(r.isolated_count) / static_cast<double>(r.total_sybils);
  }
  if (weight > 0) r.size_weighted_mean_density = weighted_density / static_cast<double>(weight);

  for (const auto& e : sg.edges) {
    const auto later = std::max(sg.nodes[index.at(e.a)].created_at,
                                sg.nodes[index.at(e.b)].created_at);
    ++r.edge_time_gap_hours[(e.created_at - later) / kSecondsPerHour];
  }

  if (!formations.empty() && !sg.edges.empty()) {
    const auto incidental =
        std::count_if(formations.begin(), formations.end(), [](const EdgeFormationResult& f) {
          return f.formation == EdgeFormation::incidental;
        });
    r.incidental_edge_fraction =
        static_cast<double>(incidental) / static_cast<double>(formations.size());
  }
  return r;
}

}  // namespace sybilwatch
