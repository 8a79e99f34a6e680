#include "sybilwatch/features.hpp"

#include <algorithm>

#include "sybilwatch/error.hpp"

namespace sybilwatch {

std::string_view to_string(Feature f) noexcept {
  switch (f) {
    case Feature::invite_rate: return "invite_rate";
    case Feature::outgoing_accept_ratio: return "outgoing_accept_ratio";
    case Feature::incoming_request_count: return "incoming_request_count";
    case Feature::local_clustering: return "local_clustering";
    case Feature::outgoing_sent_total: return "outgoing_sent_total";
  }
  return "invite_rate";
}

std::optional<Feature> parse_feature(std::string_view name) noexcept {
  for (auto f : kAllFeatures) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

std::optional<double> FeatureVector::value(Feature f) const noexcept {
  switch (f) {
    case Feature::invite_rate: return invite_rate;
    case Feature::outgoing_accept_ratio: return outgoing_accept_ratio;
    case Feature::incoming_request_count: return static_cast<double>(incoming_request_count);
    case Feature::local_clustering: return local_clustering;
    case Feature::outgoing_sent_total: return static_cast<double>(outgoing_sent_total);
  }
  return std::nullopt;
}

FeatureState::FeatureState(FeatureConfig cfg) : cfg_(cfg) {
  if (cfg_.window_seconds <= 0) throw Error(Errc::invalid_config, "window_seconds must be > 0");
}

NodeId FeatureState::known(const AccountId& id) const {
  auto n = graph_.find(id);
  if (!n) throw Error(Errc::unknown_account, id.str());
  return *n;
}

void FeatureState::evict(std::deque<Timestamp>& ring, Timestamp now) const {
  const Timestamp floor = now - cfg_.window_seconds;
  while (!ring.empty() && ring.front() <= floor) ring.pop_front();
}

AppliedEvent FeatureState::apply_event(const Event& e) {
  if (e.ts < 0) throw Error(Errc::malformed_event, "negative timestamp");
  if (last_ts_ && e.ts < *last_ts_) {
    throw Error(Errc::out_of_order_event, "ts " + std::to_string(e.ts) + " after " +
                                              std::to_string(*last_ts_));
  }

  AppliedEvent applied;
  if (e.type == EventType::account_created) {
    applied.actor = graph_.add_account(AccountRecord{e.actor, e.ts, Label::unknown});
    accounts_.emplace_back();
    last_ts_ = e.ts;
    return applied;
  }

  if (!e.target) throw Error(Errc::malformed_event, "request event without a target");
  const NodeId from = known(e.actor);
  const NodeId to = known(*e.target);
  if (from == to) throw Error(Errc::self_loop, e.actor.str());
  if (e.ts < graph_.account(from).created_at || e.ts < graph_.account(to).created_at) {
    throw Error(Errc::time_before_creation, e.actor.str() + " -> " + e.target->str());
  }
  applied.actor = from;
  applied.target = to;
  const auto key = directed_key(from, to);

  switch (e.type) {
    case EventType::request_sent: {
      auto& sender = accounts_[from];
      auto& receiver = accounts_[to];
      sender.outgoing.push_back(e.ts);
      evict(sender.outgoing, e.ts);
      ++sender.sent_total;
      receiver.incoming.push_back(e.ts);
      evict(receiver.incoming, e.ts);
      ++pending_[key];
      break;
    }
    case EventType::request_accepted:
    case EventType::request_rejected: {
      auto it = pending_.find(key);
      if (it == pending_.end()) {
        throw Error(Errc::unmatched_response, std::string(to_string(e.type)) + " " +
                                                  e.actor.str() + " -> " + e.target->str() +
                                                  " without a pending request");
      }
      if (e.type == EventType::request_accepted) {
        graph_.check_edge(from, to, e.ts, from);
        graph_.add_edge(from, to, e.ts, from);
        ++accounts_[from].accepted_total;
      }
      if (--it->second == 0) pending_.erase(it);
      break;
    }
    case EventType::account_created:
      break;
  }
  last_ts_ = e.ts;
  return applied;
}

FeatureVector FeatureState::snapshot(const AccountId& u, Timestamp now) const {
  return snapshot(known(u), now);
}

FeatureVector FeatureState::snapshot(NodeId u, Timestamp now) const {
  if (last_ts_ && now < *last_ts_) {
    throw Error(Errc::out_of_order_event, "snapshot at " + std::to_string(now) +
                                              " precedes last applied event");
  }
  const auto& st = accounts_.at(u);
  auto in_window = [&](const std::deque<Timestamp>& ring) {
    const auto lo = std::upper_bound(ring.begin(), ring.end(), now - cfg_.window_seconds);
    const auto hi = std::upper_bound(lo, ring.end(), now);
    return static_cast<std::uint64_t>(hi - lo);
  };

  FeatureVector fv;
  fv.invite_rate = static_cast<double>(in_window(st.outgoing)) /
                   (static_cast<double>(cfg_.window_seconds) / kSecondsPerHour);
  if (st.sent_total > 0 && st.sent_total >= cfg_.min_sent) {
    fv.outgoing_accept_ratio =
        static_cast<double>(st.accepted_total) / static_cast<double>(st.sent_total);
  }
  fv.incoming_request_count = in_window(st.incoming);
  fv.local_clustering = graph_.local_clustering(u);
  fv.outgoing_sent_total = st.sent_total;
  return fv;
}

}  // namespace sybilwatch
