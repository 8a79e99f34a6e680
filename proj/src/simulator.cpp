#include "sybilwatch/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <string>
#include <tuple>
#include <unordered_set>

#include "sybilwatch/error.hpp"
#include "sybilwatch/graph.hpp"
#include "sybilwatch/rng.hpp"
#include "sybilwatch/topology.hpp"

namespace sybilwatch {

namespace {

void require_probability(double p, const char* field) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(Errc::invalid_config, std::string(field) + " must be in [0,1]");
  }
}

void require_non_negative(double x, const char* field) {
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw Error(Errc::invalid_config, std::string(field) + " must be finite and >= 0");
  }
}

struct Candidate {
  Timestamp ts;
  std::uint32_t sender;
  std::uint32_t local_seq;
  std::uint32_t target;
  bool targeted;
  double accept_u;
  Timestamp delay;
};

struct Pending {
  Timestamp ts;
  std::uint64_t seq;
  std::uint32_t sender;
  std::uint32_t target;
  bool accepted;
  bool targeted;

  bool operator>(const Pending& o) const { return std::tie(ts, seq) > std::tie(o.ts, o.seq); }
};

std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  if (a > b) std::swap(a, b);
  return (std::uint64_t{a} << 32) | b;
}

class Generator {
 public:
  explicit Generator(const SimConfig& cfg)
      : cfg_(cfg),
        n_total_(cfg.n_normal + cfg.n_sybil),
        duration_s_(static_cast<Timestamp>(std::floor(cfg.duration_hours * kSecondsPerHour))) {}

  SimOutput run() {
    assign_creation_times();
    assign_popularity();
    for (std::uint32_t i = 0; i < n_total_; ++i) generate_requests(i);
    std::sort(candidates_.begin(), candidates_.end(), [](const Candidate& a, const Candidate& b) {
      return std::tie(a.ts, a.sender, a.local_seq) < std::tie(b.ts, b.sender, b.local_seq);
    });
    replay();
    return std::move(out_);
  }

 private:
  bool is_sybil(std::uint32_t i) const { return i >= cfg_.n_normal; }

  void assign_creation_times() {
    created_.assign(n_total_, 0);
    streams_.reserve(n_total_);
    ids_.reserve(n_total_);
    for (std::uint32_t i = 0; i < n_total_; ++i) {
      streams_.push_back(Xoshiro256ss::stream(cfg_.seed, i));
      ids_.emplace_back("u" + std::to_string(i));
      if (is_sybil(i)) {
        const double hours = streams_[i].uniform() * cfg_.duration_hours / 2.0;
        created_[i] = static_cast<Timestamp>(std::floor(hours * kSecondsPerHour));
        created_hours_.push_back(hours);
      }
    }
    live_sybils_.resize(cfg_.n_sybil);
    std::iota(live_sybils_.begin(), live_sybils_.end(), static_cast<std::uint32_t>(cfg_.n_normal));
    std::stable_sort(live_sybils_.begin(), live_sybils_.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return created_[a] < created_[b]; });
    sybil_position_.assign(n_total_, 0);
    for (std::uint32_t p = 0; p < live_sybils_.size(); ++p) sybil_position_[live_sybils_[p]] = p;
  }

  void assign_popularity() {
    std::vector<std::uint32_t> order(n_total_);
    std::iota(order.begin(), order.end(), 0u);
    auto rng = Xoshiro256ss::stream(cfg_.seed, Xoshiro256ss::kPopularityStream);
    for (std::uint64_t i = n_total_; i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    std::vector<double> weight(n_total_);
    for (std::uint64_t rank = 0; rank < n_total_; ++rank) {
      weight[order[rank]] = std::pow(static_cast<double>(rank + 1), -cfg_.popularity_exponent);
    }
    cumulative_.resize(n_total_);
    double acc = 0.0;
    for (std::uint64_t i = 0; i < n_total_; ++i) cumulative_[i] = (acc += weight[i]);
  }

  std::optional<std::uint32_t> draw_targeted(std::uint32_t sender, Timestamp ts,
                                             Xoshiro256ss& rng) const {
    // Live Sybils form a prefix of live_sybils_ (sorted by creation).
    auto end = std::upper_bound(live_sybils_.begin(), live_sybils_.end(), ts,
                                [&](Timestamp t, std::uint32_t s) { return t < created_[s]; });
    const auto live = static_cast<std::uint64_t>(end - live_sybils_.begin());
    if (live < 2) return std::nullopt;
    auto j = rng.below(live - 1);
    if (j >= sybil_position_[sender]) ++j;
    return live_sybils_[j];
  }

  std::optional<std::uint32_t> draw_untargeted(std::uint32_t sender, Timestamp ts,
                                               Xoshiro256ss& rng) const {
    const double total = cumulative_.back();
    for (int attempt = 0; attempt < 32; ++attempt) {
      const double x = rng.uniform() * total;
      auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
      if (it == cumulative_.end()) --it;
      const auto a = static_cast<std::uint32_t>(it - cumulative_.begin());
      if (a != sender && created_[a] <= ts) return a;
    }
    return std::nullopt;
  }

  void emit_candidate(std::uint32_t sender, Timestamp ts, bool targeted, std::uint32_t& local_seq) {
    auto& rng = streams_[sender];
    auto target = targeted ? draw_targeted(sender, ts, rng) : draw_untargeted(sender, ts, rng);
    const double accept_u = rng.uniform();
    const auto delay = static_cast<Timestamp>(
        std::floor(rng.exponential_mean(cfg_.mean_response_delay_hours) * kSecondsPerHour));
    const std::uint32_t seq = local_seq++;
    if (!target || ts > duration_s_) return;
    candidates_.push_back(Candidate{ts, sender, seq, *target, targeted, accept_u, delay});
  }

  void generate_requests(std::uint32_t i) {
    auto& rng = streams_[i];
    std::uint32_t local_seq = 0;
    const double start = is_sybil(i) ? created_hours_[i - cfg_.n_normal] : 0.0;
    auto to_seconds = [](double hours) {
      return static_cast<Timestamp>(std::floor(hours * kSecondsPerHour));
    };

    if (!is_sybil(i)) {
      if (cfg_.normal_invite_rate <= 0.0) return;
      for (double t = start;;) {
        t += rng.exponential_mean(1.0 / cfg_.normal_invite_rate);
        if (t > cfg_.duration_hours) break;
        emit_candidate(i, to_seconds(t), false, local_seq);
      }
      return;
    }

    const double targeted_rate = cfg_.sybil_target_sybil_prob * cfg_.sybil_invite_rate;
    if (targeted_rate > 0.0) {
      for (double t = start;;) {
        t += rng.exponential_mean(1.0 / targeted_rate);
        if (t > cfg_.duration_hours) break;
        emit_candidate(i, to_seconds(t), true, local_seq);
      }
    }
    const double session_rate = (1.0 - cfg_.sybil_target_sybil_prob) * cfg_.sybil_invite_rate /
                                static_cast<double>(cfg_.sybil_burst_size);
    if (session_rate > 0.0) {
      for (double t = start;;) {
        t += rng.exponential_mean(1.0 / session_rate);
        if (t > cfg_.duration_hours) break;
        for (std::uint64_t b = 0; b < cfg_.sybil_burst_size; ++b) {
          const double offset = rng.uniform() * cfg_.sybil_burst_span_seconds;
          const auto ts = static_cast<Timestamp>(std::floor(t * kSecondsPerHour + offset));
          emit_candidate(i, ts, false, local_seq);
        }
      }
    }
  }

  double accept_probability(std::uint32_t sender, std::uint32_t receiver) const {
    if (is_sybil(receiver)) return cfg_.sybil_accept_prob;
    return is_sybil(sender) ? cfg_.accept_prob_normal_from_sybil
                            : cfg_.accept_prob_normal_from_normal;
  }

  void replay() {
    std::vector<std::uint32_t> creation_order(n_total_);
    std::iota(creation_order.begin(), creation_order.end(), 0u);
    std::stable_sort(creation_order.begin(), creation_order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return created_[a] < created_[b]; });

    for (std::uint32_t i = 0; i < n_total_; ++i) {
      out_.truth.labels.emplace_back(ids_[i], is_sybil(i) ? Label::sybil : Label::normal);
    }

    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> responses;
    std::unordered_set<std::uint64_t> friends;
    std::unordered_set<std::uint64_t> pending;
    std::size_t next_created = 0;
    std::size_t next_request = 0;
    std::uint64_t request_seq = 0;

    constexpr Timestamp kNone = std::numeric_limits<Timestamp>::max();
    for (;;) {
      const Timestamp tc =
          next_created < creation_order.size() ? created_[creation_order[next_created]] : kNone;
      const Timestamp tr = next_request < candidates_.size() ? candidates_[next_request].ts : kNone;
      const Timestamp tp = responses.empty() ? kNone : responses.top().ts;
      if (tc == kNone && tr == kNone && tp == kNone) break;

      if (tc <= tr && tc <= tp) {
        const auto a = creation_order[next_created++];
        out_.events.push_back(Event::account_created(tc, ids_[a]));
      } else if (tr <= tp) {
        const auto& c = candidates_[next_request++];
        const auto key = pair_key(c.sender, c.target);
        if (friends.contains(key) || pending.contains(key)) continue;
        pending.insert(key);
        out_.events.push_back(Event::request_sent(c.ts, ids_[c.sender], ids_[c.target]));
        const bool accepted = c.accept_u < accept_probability(c.sender, c.target);
        responses.push(Pending{c.ts + c.delay, request_seq++, c.sender, c.target, accepted,
                               c.targeted});
      } else {
        const Pending p = responses.top();
        responses.pop();
        const auto key = pair_key(p.sender, p.target);
        pending.erase(key);
        if (!p.accepted) {
          out_.events.push_back(Event::request_rejected(p.ts, ids_[p.sender], ids_[p.target]));
          continue;
        }
        friends.insert(key);
        out_.events.push_back(Event::request_accepted(p.ts, ids_[p.sender], ids_[p.target]));
        if (is_sybil(p.sender) && is_sybil(p.target)) {
          auto& bucket = p.targeted ? out_.truth.intentional_edges : out_.truth.accidental_edges;
          bucket.emplace_back(ids_[p.sender], ids_[p.target]);
        }
      }
    }
  }

  const SimConfig& cfg_;
  std::uint64_t n_total_;
  Timestamp duration_s_;
  std::vector<Timestamp> created_;
  std::vector<double> created_hours_;
  std::vector<Xoshiro256ss> streams_;
  std::vector<AccountId> ids_;
  std::vector<std::uint32_t> live_sybils_;
  std::vector<std::uint32_t> sybil_position_;
  std::vector<double> cumulative_;
  std::vector<Candidate> candidates_;
  SimOutput out_;
};

}  // namespace

void SimConfig::validate() const {
  if (!(duration_hours > 0.0) || !std::isfinite(duration_hours)) {
    throw Error(Errc::invalid_config, "duration_hours must be > 0");
  }
  require_non_negative(normal_invite_rate, "normal_invite_rate");
  require_non_negative(sybil_invite_rate, "sybil_invite_rate");
  require_probability(accept_prob_normal_from_normal, "accept_prob_normal_from_normal");
  require_probability(accept_prob_normal_from_sybil, "accept_prob_normal_from_sybil");
  require_probability(sybil_accept_prob, "sybil_accept_prob");
  require_probability(sybil_target_sybil_prob, "sybil_target_sybil_prob");
  require_non_negative(popularity_exponent, "popularity_exponent");
  require_non_negative(sybil_burst_span_seconds, "sybil_burst_span_seconds");
  require_non_negative(mean_response_delay_hours, "mean_response_delay_hours");
  if (sybil_burst_size == 0) throw Error(Errc::invalid_config, "sybil_burst_size must be >= 1");
  if (n_normal + n_sybil > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::invalid_config, "n_normal + n_sybil exceeds 2^32 - 1");
  }
}

LabelMap GroundTruth::label_map() const {
  LabelMap out;
  out.reserve(labels.size());
  for (const auto& [id, label] : labels) out.emplace(id, label);
  return out;
}

SimOutput generate(const SimConfig& cfg) {
  cfg.validate();
  if (cfg.n_normal + cfg.n_sybil == 0) return {};
  return Generator(cfg).run();
}

double measured_isolated_fraction(const SimOutput& out) {
  const auto graph = graph_from_events(out.events);
  const auto sub = extract_sybil_subgraph(graph, out.truth.label_map());
  return isolated_fraction(sub).value_or(0.0);
}

SimConfig calibrate_isolation(SimConfig cfg, double target, const IsolationCalibration& options) {
  if (!(target > 0.0 && target < 1.0)) {
    throw Error(Errc::invalid_config, "target_fraction must lie strictly inside (0,1)");
  }
  cfg.validate();
  if (cfg.n_sybil == 0) throw Error(Errc::invalid_config, "n_sybil must be > 0 to calibrate");

  int budget = options.max_iterations;
  auto measure = [&](const SimConfig& c) {
    if (budget-- <= 0) {
      throw Error(Errc::calibration_failed, "iteration budget of " +
                                                std::to_string(options.max_iterations) +
                                                " exhausted");
    }
    return measured_isolated_fraction(generate(c));
  };
  auto within = [&](double f) { return std::abs(f - target) <= options.tolerance; };

  // Bisects `set(cfg, x)` over [lo, hi]; the isolated fraction falls as x grows.
  auto bisect = [&](auto set, double lo, double hi) -> SimConfig {
    for (;;) {
      const double mid = 0.5 * (lo + hi);
      SimConfig c = cfg;
      set(c, mid);
      const double f = measure(c);
      if (within(f)) return c;
      (f > target ? lo : hi) = mid;
    }
  };
  auto set_pss = [](SimConfig& c, double p) { c.sybil_target_sybil_prob = p; };
  const double base_rate = cfg.sybil_invite_rate;
  auto set_scale = [base_rate](SimConfig& c, double s) { c.sybil_invite_rate = base_rate * s; };

  const double f0 = measure(cfg);
  if (within(f0)) return cfg;

  if (f0 < target) {
    // Too connected: withdraw intentional targeting first, then send less.
    if (cfg.sybil_target_sybil_prob > 0.0) {
      SimConfig c = cfg;
      c.sybil_target_sybil_prob = 0.0;
      const double f = measure(c);
      if (within(f)) return c;
      if (f > target) return bisect(set_pss, 0.0, cfg.sybil_target_sybil_prob);
      cfg = c;
    }
    return bisect(set_scale, 0.0, 1.0);
  }

  // Too isolated: Sybil-Sybil edges need an accepting Sybil.
  if (cfg.sybil_accept_prob == 0.0) {
    cfg.sybil_accept_prob = 1.0;
    const double f = measure(cfg);
    if (within(f)) return cfg;
    if (f < target) return bisect(set_scale, 0.0, 1.0);
  }
  if (cfg.sybil_target_sybil_prob < 1.0) {
    SimConfig c = cfg;
    c.sybil_target_sybil_prob = 1.0;
    const double f = measure(c);
    if (within(f)) return c;
    if (f < target) return bisect(set_pss, cfg.sybil_target_sybil_prob, 1.0);
    cfg = c;
  }
  if (base_rate <= 0.0) {
    throw Error(Errc::calibration_failed, "sybil_invite_rate is 0; no Sybil edges can form");
  }
  double hi = 2.0;
  for (;; hi *= 2.0) {
    SimConfig c = cfg;
    set_scale(c, hi);
    const double f = measure(c);
    if (within(f)) return c;
    if (f < target) break;
  }
  return bisect(set_scale, hi / 2.0, hi);
}

}  // namespace sybilwatch
