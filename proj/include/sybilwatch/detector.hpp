#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sybilwatch/features.hpp"
#include "sybilwatch/types.hpp"

namespace sybilwatch {

enum class Comparator : std::uint8_t { greater_than, less_than };

std::string_view to_string(Comparator c) noexcept;

// Strict comparison of one feature against a threshold. An undefined feature
// value never matches, and neither does equality.
struct ThresholdRule {
  Feature feature = Feature::invite_rate;
  Comparator comparator = Comparator::greater_than;
  double threshold = 0.0;

  bool matches(const FeatureVector& fv) const noexcept {
    const auto v = fv.value(feature);
    if (!v) return false;
    return comparator == Comparator::greater_than ? *v > threshold : *v < threshold;
  }

  // "invite_rate > 10" or "invite_rate greater_than 10".
  // UnknownFeatureName / InvalidConfig on bad input.
  static ThresholdRule parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const ThresholdRule&, const ThresholdRule&) = default;
};

enum class EvaluationTrigger : std::uint8_t { every_event, on_request_sent_only };

std::string_view to_string(EvaluationTrigger t) noexcept;
std::optional<EvaluationTrigger> parse_trigger(std::string_view text) noexcept;

struct ClassifierConfig {
  std::vector<ThresholdRule> rules;
  std::size_t min_matches = 1;
  EvaluationTrigger trigger = EvaluationTrigger::on_request_sent_only;
  FeatureConfig features;

  // invite_rate > 10, outgoing_accept_ratio < 0.5,
  // incoming_request_count < 2, local_clustering < 0.05; 3 of 4.
  static ClassifierConfig defaults();

  // InvalidConfig when k is out of [1, |rules|] or a (feature, comparator)
  // pair repeats.
  void validate() const;

  friend bool operator==(const ClassifierConfig&, const ClassifierConfig&) = default;
};

enum class Decision : std::uint8_t { sybil, benign };

std::string_view to_string(Decision d) noexcept;

struct Verdict {
  AccountId account;
  Decision decision = Decision::benign;
  std::vector<std::uint32_t> matched_rules;
  FeatureVector features;
  Timestamp at = 0;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

Verdict classify(const FeatureVector& fv, const ClassifierConfig& cfg, const AccountId& u,
                 Timestamp t);

struct Ban {
  AccountId account;
  Timestamp flagged_at = 0;

  friend bool operator==(const Ban&, const Ban&) = default;
};

// Online detector: applies events to the feature state and classifies the
// accounts the trigger selects. The first sybil verdict bans an account for
// good; banned accounts are not evaluated again, though their events still
// update everyone's features.
class StreamDetector {
 public:
  explicit StreamDetector(ClassifierConfig cfg);

  // Applies e and appends the verdicts it triggers to `out`.
  void process(const Event& e, std::vector<Verdict>& out);

  const ClassifierConfig& config() const noexcept { return cfg_; }
  const FeatureState& features() const noexcept { return features_; }
  const std::vector<Ban>& bans() const noexcept { return bans_; }
  bool is_banned(NodeId n) const { return n < banned_.size() && banned_[n]; }
  const std::optional<Verdict>& latest_verdict(NodeId n) const { return latest_[n]; }
  std::uint64_t events_applied() const noexcept { return events_applied_; }
  std::uint64_t classify_calls() const noexcept { return classify_calls_; }

  friend bool operator==(const StreamDetector&, const StreamDetector&) = default;

 private:
  friend struct StateCodec;

  void evaluate(NodeId n, Timestamp t, std::vector<Verdict>& out);

  ClassifierConfig cfg_;
  FeatureState features_;
  std::vector<Ban> bans_;
  std::vector<bool> banned_;
  std::vector<std::optional<Verdict>> latest_;
  std::uint64_t events_applied_ = 0;
  std::uint64_t classify_calls_ = 0;
};

struct DetectionResult {
  std::vector<Verdict> verdicts;
  std::vector<Ban> bans;
};

// Runs a StreamDetector over an ordered event sequence.
DetectionResult process_stream(std::span<const Event> events, const ClassifierConfig& cfg);

// One rule slot to calibrate; the comparator is chosen when left open.
struct RuleTemplate {
  Feature feature = Feature::invite_rate;
  std::optional<Comparator> comparator;
};

std::vector<RuleTemplate> default_rule_template();

struct ThresholdCalibration {
  double max_fpr = 0.01;
};

// Fits thresholds on the final observed features of a labelled training
// stream (see final_state_features). Each rule's threshold is the midpoint
// between adjacent distinct observed values that maximises TPR - FPR for that
// rule alone (ties: the centre of the optimal run; then greater_than over
// less_than). k is the value with FPR <= max_fpr and the highest recall,
// preferring larger k on ties; if no k meets the FPR bound, the k with the
// lowest FPR. DegenerateTraining when either label class is empty.
ClassifierConfig calibrate_thresholds(std::span<const Event> training, const LabelMap& truth,
                                      std::span<const RuleTemplate> rule_template,
                                      const ClassifierConfig& base = ClassifierConfig::defaults(),
                                      const ThresholdCalibration& options = {});

// Every account's features as the detector last saw them: the snapshot at
// its final evaluation trigger under `trigger`, or at the last event of the
// stream for accounts that were never triggered. Graph order.
std::vector<std::pair<AccountId, FeatureVector>> final_state_features(
    std::span<const Event> events, const FeatureConfig& cfg, EvaluationTrigger trigger);

}  // namespace sybilwatch
