#include "sybilwatch/detector.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <utility>

#include "sybilwatch/error.hpp"

namespace sybilwatch {

std::string_view to_string(Comparator c) noexcept {
  return c == Comparator::greater_than ? "greater_than" : "less_than";
}

std::string_view to_string(EvaluationTrigger t) noexcept {
  return t == EvaluationTrigger::every_event ? "every_event" : "on_request_sent_only";
}

std::optional<EvaluationTrigger> parse_trigger(std::string_view text) noexcept {
  if (text == "every_event") return EvaluationTrigger::every_event;
  if (text == "on_request_sent_only") return EvaluationTrigger::on_request_sent_only;
  return std::nullopt;
}

std::string_view to_string(Decision d) noexcept {
  return d == Decision::sybil ? "sybil" : "benign";
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

}  // namespace

ThresholdRule ThresholdRule::parse(std::string_view text) {
  text = trim(text);
  std::string_view name, op, value;
  if (auto pos = text.find_first_of("<>"); pos != std::string_view::npos) {
    name = trim(text.substr(0, pos));
    op = text.substr(pos, 1);
    value = trim(text.substr(pos + 1));
  } else {
    const auto a = text.find_first_of(" \t");
    if (a == std::string_view::npos) throw Error(Errc::invalid_config, "bad rule: " + std::string(text));
    name = text.substr(0, a);
    auto rest = trim(text.substr(a));
    const auto b = rest.find_first_of(" \t");
    if (b == std::string_view::npos) throw Error(Errc::invalid_config, "bad rule: " + std::string(text));
    op = rest.substr(0, b);
    value = trim(rest.substr(b));
  }

  ThresholdRule rule;
  auto f = parse_feature(name);
  if (!f) throw Error(Errc::unknown_feature_name, std::string(name));
  rule.feature = *f;
  if (op == ">" || op == "greater_than") {
    rule.comparator = Comparator::greater_than;
  } else if (op == "<" || op == "less_than") {
    rule.comparator = Comparator::less_than;
  } else {
    throw Error(Errc::invalid_config, "bad comparator in rule: " + std::string(text));
  }
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), rule.threshold);
  if (ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(rule.threshold)) {
    throw Error(Errc::invalid_config, "bad threshold in rule: " + std::string(text));
  }
  return rule;
}

std::string ThresholdRule::to_string() const {
  return std::string(sybilwatch::to_string(feature)) +
         (comparator == Comparator::greater_than ? " > " : " < ") + format_double(threshold);
}

ClassifierConfig ClassifierConfig::defaults() {
  ClassifierConfig cfg;
  cfg.rules = {
      {Feature::invite_rate, Comparator::greater_than, 10.0},
      {Feature::outgoing_accept_ratio, Comparator::less_than, 0.5},
      {Feature::incoming_request_count, Comparator::less_than, 2.0},
      {Feature::local_clustering, Comparator::less_than, 0.05},
  };
  cfg.min_matches = 3;
  return cfg;
}

void ClassifierConfig::validate() const {
  if (rules.empty()) throw Error(Errc::invalid_config, "no rules");
  if (min_matches < 1 || min_matches > rules.size()) {
    throw Error(Errc::invalid_config, "min_matches must be in [1, " +
                                          std::to_string(rules.size()) + "]");
  }
  std::set<std::pair<Feature, Comparator>> seen;
  for (const auto& r : rules) {
    if (!seen.emplace(r.feature, r.comparator).second) {
      throw Error(Errc::invalid_config, "duplicate rule on " + std::string(sybilwatch::to_string(r.feature)) +
                                            " " + std::string(sybilwatch::to_string(r.comparator)));
    }
  }
  if (features.window_seconds <= 0) throw Error(Errc::invalid_config, "window_seconds must be > 0");
}

Verdict classify(const FeatureVector& fv, const ClassifierConfig& cfg, const AccountId& u,
                 Timestamp t) {
  Verdict v{u, Decision::benign, {}, fv, t};
  for (std::uint32_t i = 0; i < cfg.rules.size(); ++i) {
    if (cfg.rules[i].matches(fv)) v.matched_rules.push_back(i);
  }
  if (v.matched_rules.size() >= cfg.min_matches) v.decision = Decision::sybil;
  return v;
}

StreamDetector::StreamDetector(ClassifierConfig cfg)
    : cfg_(std::move(cfg)), features_(cfg_.features) {
  cfg_.validate();
}

void StreamDetector::process(const Event& e, std::vector<Verdict>& out) {
  const auto applied = features_.apply_event(e);
  ++events_applied_;
  const auto n = features_.graph().account_count();
  if (banned_.size() < n) {
    banned_.resize(n, false);
    latest_.resize(n);
  }
  if (cfg_.trigger == EvaluationTrigger::on_request_sent_only) {
    if (e.type == EventType::request_sent) evaluate(applied.actor, e.ts, out);
    return;
  }
  evaluate(applied.actor, e.ts, out);
  if (applied.target) evaluate(*applied.target, e.ts, out);
}

void StreamDetector::evaluate(NodeId n, Timestamp t, std::vector<Verdict>& out) {
  if (banned_[n]) return;
  const auto& id = features_.graph().account(n).id;
  Verdict v = classify(features_.snapshot(n, t), cfg_, id, t);
  ++classify_calls_;
  if (v.decision == Decision::sybil) {
    banned_[n] = true;
    bans_.push_back(Ban{id, t});
  }
  latest_[n] = v;
  out.push_back(std::move(v));
}

DetectionResult process_stream(std::span<const Event> events, const ClassifierConfig& cfg) {
  StreamDetector detector(cfg);
  DetectionResult result;
  for (const auto& e : events) detector.process(e, result.verdicts);
  result.bans = detector.bans();
  return result;
}

std::vector<std::pair<AccountId, FeatureVector>> final_state_features(
    std::span<const Event> events, const FeatureConfig& cfg, EvaluationTrigger trigger) {
  FeatureState st(cfg);
  std::vector<std::optional<FeatureVector>> seen;
  auto observe = [&](NodeId n, Timestamp t) {
    if (seen.size() <= n) seen.resize(st.graph().account_count());
    seen[n] = st.snapshot(n, t);
  };
  for (const auto& e : events) {
    const auto applied = st.apply_event(e);
    if (trigger == EvaluationTrigger::on_request_sent_only) {
      if (e.type == EventType::request_sent) observe(applied.actor, e.ts);
    } else {
      observe(applied.actor, e.ts);
      if (applied.target) observe(*applied.target, e.ts);
    }
  }
  const Timestamp end = events.empty() ? 0 : *st.last_applied_ts();
  seen.resize(st.graph().account_count());
  std::vector<std::pair<AccountId, FeatureVector>> out;
  out.reserve(seen.size());
  for (NodeId n = 0; n < seen.size(); ++n) {
    out.emplace_back(st.graph().account(n).id, seen[n] ? *seen[n] : st.snapshot(n, end));
  }
  return out;
}

std::vector<RuleTemplate> default_rule_template() {
  return {{Feature::invite_rate, std::nullopt},
          {Feature::outgoing_accept_ratio, std::nullopt},
          {Feature::incoming_request_count, std::nullopt},
          {Feature::local_clustering, std::nullopt}};
}

namespace {

struct Sample {
  const FeatureVector* fv;
  bool sybil;
};

// TPR - FPR scaled by S*N, exact in integers.
std::int64_t youden_scaled(std::int64_t tp, std::int64_t fp, std::int64_t s, std::int64_t n) {
  return tp * n - fp * s;
}

ThresholdRule fit_rule(const RuleTemplate& slot, std::span<const Sample> samples,
                       std::int64_t total_s, std::int64_t total_n) {
  std::vector<std::pair<double, bool>> values;
  for (const auto& s : samples) {
    if (auto v = s.fv->value(slot.feature)) values.emplace_back(*v, s.sybil);
  }
  std::sort(values.begin(), values.end());

  // Distinct values with per-label counts.
  std::vector<double> distinct;
  std::vector<std::int64_t> syb, nor;
  for (const auto& [v, is_sybil] : values) {
    if (distinct.empty() || distinct.back() != v) {
      distinct.push_back(v);
      syb.push_back(0);
      nor.push_back(0);
    }
    ++(is_sybil ? syb.back() : nor.back());
  }
  const std::size_t m = distinct.size();

  ThresholdRule rule{slot.feature, slot.comparator.value_or(Comparator::greater_than),
                     distinct.empty() ? 0.0 : distinct.back()};
  if (m < 2) {
    // Nothing to separate; pick a threshold that matches nothing.
    if (rule.comparator == Comparator::less_than && m == 1) rule.threshold = distinct.front();
    return rule;
  }

  std::vector<std::int64_t> prefix_s(m), prefix_n(m);
  std::int64_t acc_s = 0, acc_n = 0;
  for (std::size_t i = 0; i < m; ++i) {
    prefix_s[i] = (acc_s += syb[i]);
    prefix_n[i] = (acc_n += nor[i]);
  }
  const std::int64_t defined_s = acc_s, defined_n = acc_n;

  // Candidate i sits between distinct[i] and distinct[i + 1].
  auto score = [&](Comparator c, std::size_t i) {
    if (c == Comparator::less_than) return youden_scaled(prefix_s[i], prefix_n[i], total_s, total_n);
    return youden_scaled(defined_s - prefix_s[i], defined_n - prefix_n[i], total_s, total_n);
  };

  struct Best {
    std::int64_t score;
    std::size_t first;
    std::size_t last;
  };
  auto best_for = [&](Comparator c) {
    Best b{score(c, 0), 0, 0};
    for (std::size_t i = 1; i + 1 < m; ++i) {
      const auto sc = score(c, i);
      if (sc > b.score) b = Best{sc, i, i};
      else if (sc == b.score) b.last = i;
    }
    return b;
  };

  Comparator chosen;
  Best best;
  if (slot.comparator) {
    chosen = *slot.comparator;
    best = best_for(chosen);
  } else {
    const auto gt = best_for(Comparator::greater_than);
    const auto lt = best_for(Comparator::less_than);
    chosen = lt.score > gt.score ? Comparator::less_than : Comparator::greater_than;
    best = chosen == Comparator::less_than ? lt : gt;
  }
  rule.comparator = chosen;

  // Centre of the optimal run, when it is itself optimal.
  const double centre = 0.5 * (distinct[best.first] + distinct[best.last + 1]);
  const auto below = static_cast<std::size_t>(
      std::upper_bound(distinct.begin(), distinct.end(), centre) - distinct.begin());
  if (below >= 1 && below < m && distinct[below - 1] != centre &&
      score(chosen, below - 1) == best.score) {
    rule.threshold = centre;
  } else {
    rule.threshold = 0.5 * (distinct[best.first] + distinct[best.first + 1]);
  }
  return rule;
}

}  // namespace

ClassifierConfig calibrate_thresholds(std::span<const Event> training, const LabelMap& truth,
                                      std::span<const RuleTemplate> rule_template,
                                      const ClassifierConfig& base,
                                      const ThresholdCalibration& options) {
  if (rule_template.empty()) throw Error(Errc::invalid_config, "empty rule template");
  const auto features = final_state_features(training, base.features, base.trigger);

  std::vector<Sample> samples;
  std::int64_t total_s = 0, total_n = 0;
  for (const auto& [id, fv] : features) {
    auto it = truth.find(id);
    if (it == truth.end() || it->second == Label::unknown) continue;
    const bool sybil = it->second == Label::sybil;
    samples.push_back(Sample{&fv, sybil});
    ++(sybil ? total_s : total_n);
  }
  if (total_s == 0 || total_n == 0) {
    throw Error(Errc::degenerate_training, "training data needs both sybil and normal accounts");
  }

  ClassifierConfig cfg = base;
  cfg.rules.clear();
  for (const auto& slot : rule_template) cfg.rules.push_back(fit_rule(slot, samples, total_s, total_n));

  const std::size_t n_rules = cfg.rules.size();
  std::vector<std::int64_t> tp(n_rules + 1, 0), fp(n_rules + 1, 0);
  for (const auto& s : samples) {
    std::size_t matches = 0;
    for (const auto& r : cfg.rules) matches += r.matches(*s.fv) ? 1 : 0;
    // An account with `matches` hits is flagged for every k <= matches.
    for (std::size_t k = 1; k <= matches; ++k) ++(s.sybil ? tp[k] : fp[k]);
  }

  std::optional<std::size_t> pick;
  const double allowed_fp = options.max_fpr * static_cast<double>(total_n);
  for (std::size_t k = 1; k <= n_rules; ++k) {
    if (static_cast<double>(fp[k]) > allowed_fp) continue;
    if (!pick || tp[k] >= tp[*pick]) pick = k;
  }
  if (!pick) {
    pick = 1;
    for (std::size_t k = 2; k <= n_rules; ++k) {
      if (fp[k] < fp[*pick] || (fp[k] == fp[*pick] && tp[k] >= tp[*pick])) pick = k;
    }
  }
  cfg.min_matches = *pick;
  cfg.validate();
  return cfg;
}

}  // namespace sybilwatch
