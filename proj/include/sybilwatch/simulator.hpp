#pragma once

#include <cstdint>
#include <vector>

#include "sybilwatch/types.hpp"

namespace sybilwatch {

// Behavioural parameters of a synthetic workload. Rates are per hour.
struct SimConfig {
  std::uint64_t n_normal = 2000;
  std::uint64_t n_sybil = 200;
  double duration_hours = 72.0;
  double normal_invite_rate = 0.05;
  double sybil_invite_rate = 20.0;
  double accept_prob_normal_from_normal = 0.9;
  double accept_prob_normal_from_sybil = 0.2;
  double sybil_accept_prob = 1.0;
  double sybil_target_sybil_prob = 0.0;
  double popularity_exponent = 1.0;
  // Untargeted Sybil requests are sent in bulk sessions of this many
  // requests spread uniformly over the span. A size of 1 gives a plain
  // Poisson request process.
  std::uint64_t sybil_burst_size = 40;
  double sybil_burst_span_seconds = 240.0;
  double mean_response_delay_hours = 1.0;
  std::uint64_t seed = 42;

  // InvalidConfig naming the offending field.
  void validate() const;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

struct GroundTruth {
  // Every generated account, in generation order.
  std::vector<std::pair<AccountId, Label>> labels;
  // Accepted Sybil-Sybil friendships, in acceptance order. Intentional edges
  // came from a request aimed at a Sybil on purpose; accidental ones from an
  // untargeted request that happened to land on a Sybil.
  std::vector<AccountPair> intentional_edges;
  std::vector<AccountPair> accidental_edges;

  LabelMap label_map() const;
};

struct SimOutput {
  std::vector<Event> events;
  GroundTruth truth;
};

// Deterministic generator. Accounts are indexed normals first, then Sybils,
// and named "u<index>". Account i draws from Xoshiro256ss::stream(seed, i):
//
//   1. Sybils only: creation hour = uniform() * duration/2 (floored to a
//      second). Normals exist from t = 0.
//   2. Popularity ranks are a Fisher-Yates shuffle of all accounts drawn from
//      stream(seed, kPopularityStream), iterating i = N-1..1 with
//      j = below(i + 1); weight = rank^-alpha. Rank is label-independent.
//   3. Request processes, each with exponential inter-arrival gaps, running
//      from creation until duration:
//        normal: rate normal_invite_rate, untargeted;
//        sybil:  first the targeted process at rate p_ss * sybil_invite_rate,
//                then bulk sessions at rate (1 - p_ss) * rate / burst_size,
//                each session drawing burst_size offsets uniform() * span.
//      Per request, in order: [targeted: one below() over live Sybils other
//      than the sender] or [untargeted: up to 32 popularity draws, rejecting
//      the sender and accounts not yet created]; then the accept uniform();
//      then the response delay (exponential, floored to a second).
//   4. The merged schedule is replayed in (ts, phase, key) order where
//      creations precede requests precede responses at equal timestamps.
//      Requests to an existing friend or a pair with a pending request (in
//      either direction) are suppressed. Acceptance probability depends on
//      the receiver: a Sybil accepts with sybil_accept_prob, a normal with
//      accept_prob_normal_from_{normal,sybil} by sender label.
SimOutput generate(const SimConfig& cfg);

struct IsolationCalibration {
  double tolerance = 0.02;
  int max_iterations = 40;  // generate() calls
};

// Adjusts sybil_target_sybil_prob, then scales sybil_invite_rate, until the
// generated workload's isolated-Sybil fraction is within tolerance of target.
// Raises sybil_accept_prob to 1 when it is 0 and more Sybil-Sybil edges are
// needed. CalibrationFailed once the iteration budget is spent.
SimConfig calibrate_isolation(SimConfig cfg, double target_fraction,
                              const IsolationCalibration& options = {});

// Isolated-Sybil fraction of a generated workload, via the topology analyzer.
double measured_isolated_fraction(const SimOutput& out);

}  // namespace sybilwatch
