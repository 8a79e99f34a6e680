// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <unistd.h>

#include "oracles.hpp"
#include "sybilwatch/config.hpp"
#include "sybilwatch/detector.hpp"
#include "sybilwatch/error.hpp"
#include "sybilwatch/graph.hpp"
#include "sybilwatch/runner.hpp"
#include "sybilwatch/service.hpp"
#include "sybilwatch/simulator.hpp"
#include "sybilwatch/topology.hpp"
#include "sybilwatch/wire.hpp"

using namespace sybilwatch;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances.
constexpr std::uint64_t kTrainSeed = 7;
constexpr std::uint64_t kHeldOutSeed = 42;
constexpr double kMinRecall = 0.99;
constexpr double kMaxFpr = 0.01;
constexpr double kDetectionSeconds = 30.0;

constexpr double kIsolationTarget = 0.80;
constexpr double kIsolationTolerance = 0.02;

constexpr std::size_t kLargeComponent = 5;
constexpr double kMaxComponentDensity = 0.5;
constexpr double kMaxWeightedDensity = 0.2;

constexpr double kMinIncidental = 0.90;
constexpr double kCollusionPss = 0.9;
constexpr double kMinDeliberateRecall = 0.70;

constexpr int kClusteringGraphs = 50;
constexpr int kClusteringMaxNodes = 100;
constexpr int kComponentGraphs = 100;
constexpr int kComponentMaxNodes = 1000;
constexpr int kFeatureStreams = 20;
constexpr std::size_t kFeatureStreamEvents = 5000;
constexpr std::uint64_t kCheckpointAt = 50000;

constexpr std::uint64_t kThroughputNormals = 5000;
constexpr std::uint64_t kThroughputSybils = 850;
constexpr std::size_t kThroughputMinEvents = 1000000;
constexpr double kMinEventsPerSecond = 100000.0;
constexpr double kMaxDetectSeconds = 60.0;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Scratch {
  fs::path dir = fs::temp_directory_path() / ("sybilwatch_acceptance_" + std::to_string(::getpid()));
  Scratch() {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }

  fs::path write_log(const std::string& name, const std::vector<Event>& ev) const {
    const auto p = dir / name;
    AtomicFileWriter w(p);
    write_event_log(w.stream(), ev);
    w.commit();
    return p;
  }
};

SimConfig with_seed(std::uint64_t seed) {
  SimConfig c;
  c.seed = seed;
  return c;
}

Outcome detection_quality() {
  const auto t0 = Clock::now();
  const auto train = generate(with_seed(kTrainSeed));
  const auto tmpl = default_rule_template();
  const auto cfg = calibrate_thresholds(train.events, train.truth.label_map(), tmpl);
  const auto test = generate(with_seed(kHeldOutSeed));
  const auto result = process_stream(test.events, cfg);
  const double seconds = since(t0);

  const auto truth = test.truth.label_map();
  std::size_t sybils = 0, normals = 0, tp = 0, fp = 0;
  for (const auto& [id, l] : truth) (l == Label::sybil ? sybils : normals)++;
  for (const auto& b : result.bans) (truth.at(b.account) == Label::sybil ? tp : fp)++;
  const double recall = static_cast<double>(tp) / static_cast<double>(sybils);
  const double fpr = static_cast<double>(fp) / static_cast<double>(normals);
  return {recall >= kMinRecall && fpr <= kMaxFpr && seconds < kDetectionSeconds,
          fmt("recall=%.4f (>= %.2f) fpr=%.4f (<= %.2f) time=%.2fs (< %.0fs), k=%zu", recall,
              kMinRecall, fpr, kMaxFpr, seconds, kDetectionSeconds, cfg.min_matches)};
}

struct Calibrated {
  SimConfig cfg;
  SimOutput out;
  SocialGraph graph;
  SybilSubgraph sg;
  TopologyReport rep;
};

const Calibrated& calibrated() {
  static const Calibrated c = [] {
    Calibrated r;
    r.cfg = calibrate_isolation(SimConfig{}, kIsolationTarget);
    r.out = generate(r.cfg);
    r.graph = graph_from_events(r.out.events);
    r.sg = extract_sybil_subgraph(r.graph, r.out.truth.label_map());
    r.rep = report(r.sg, {}, classify_edge_formation(r.sg, r.out.events));
    return r;
  }();
  return c;
}

Outcome isolated_fraction_target() {
  const auto& c = calibrated();
  // BFS over the Sybil-only subgraph built straight from the event log.
  const auto labels = c.out.truth.label_map();
  std::map<AccountId, int> index;
  for (const auto& [id, l] : c.out.truth.labels) {
    if (l == Label::sybil) index.emplace(id, static_cast<int>(index.size()));
  }
  oracle::EdgeList edges;
  for (const auto& e : c.out.events) {
    if (e.type != EventType::request_accepted) continue;
    auto a = index.find(e.actor), b = index.find(*e.target);
    if (a != index.end() && b != index.end()) edges.emplace_back(a->second, b->second);
  }
  const auto comps = oracle::components_by_bfs(static_cast<int>(index.size()), edges);
  std::size_t singles = 0;
  for (const auto& comp : comps) singles += comp.size() == 1;
  const double oracle_fraction = static_cast<double>(singles) / static_cast<double>(index.size());
  const double got = c.rep.isolated_fraction.value_or(-1.0);
  const bool close = std::abs(got - kIsolationTarget) <= kIsolationTolerance;
  return {close && got == oracle_fraction,
          fmt("isolated=%.4f target=%.2f+-%.2f bfs_oracle=%.4f exact=%s (sybil_invite_rate=%.4g, p_ss=%.3g)",
              got, kIsolationTarget, kIsolationTolerance, oracle_fraction,
              got == oracle_fraction ? "yes" : "no", c.cfg.sybil_invite_rate,
              c.cfg.sybil_target_sybil_prob)};
}

Outcome looseness() {
  const auto& r = calibrated().rep;
  double worst = 0.0;
  std::size_t large = 0;
  for (const auto& comp : r.components) {
    if (comp.size < kLargeComponent) continue;
    ++large;
    worst = std::max(worst, comp.density.value_or(0.0));
  }
  const double weighted = r.size_weighted_mean_density.value_or(0.0);
  return {worst < kMaxComponentDensity && weighted < kMaxWeightedDensity && r.size_weighted_mean_density,
          fmt("components>=%zu: %zu, max density=%.4f (< %.1f), size-weighted density=%.4f (< %.1f)",
              kLargeComponent, large, worst, kMaxComponentDensity, weighted, kMaxWeightedDensity)};
}

Outcome accidental_edges() {
  SimConfig base;
  base.sybil_target_sybil_prob = 0.0;
  base.sybil_accept_prob = 1.0;
  const auto out = generate(base);
  const auto g = graph_from_events(out.events);
  const auto sg = extract_sybil_subgraph(g, out.truth.label_map());
  const auto rep = report(sg, {}, classify_edge_formation(sg, out.events));
  const double incidental = rep.incidental_edge_fraction.value_or(0.0);

  SimConfig collude = base;
  collude.sybil_target_sybil_prob = kCollusionPss;
  const auto out2 = generate(collude);
  const auto sg2 = extract_sybil_subgraph(graph_from_events(out2.events), out2.truth.label_map());
  const auto forms = classify_edge_formation(sg2, out2.events);
  std::set<AccountPair> intentional(out2.truth.intentional_edges.begin(),
                                    out2.truth.intentional_edges.end());
  std::size_t deliberate = 0, hit = 0;
  for (const auto& f : forms) {
    if (f.formation != EdgeFormation::deliberate) continue;
    ++deliberate;
    hit += intentional.count(AccountPair(f.edge.a, f.edge.b));
  }
  const double recall = intentional.empty() ? 0.0
                                            : static_cast<double>(hit) / static_cast<double>(intentional.size());
  const double precision = deliberate ? static_cast<double>(hit) / static_cast<double>(deliberate) : 0.0;
  return {incidental >= kMinIncidental && recall >= kMinDeliberateRecall,
          fmt("p_ss=0: incidental=%.4f of %zu edges (>= %.2f); p_ss=%.1f: deliberate recall=%.4f "
              "(>= %.2f) precision=%.4f over %zu intentional edges",
              incidental, rep.sybil_edge_count, kMinIncidental, kCollusionPss, recall,
              kMinDeliberateRecall, precision, intentional.size())};
}

Outcome oracle_equivalences(const Scratch& scratch) {
  std::mt19937_64 rng(20240601);
  int clustering_bad = 0, component_bad = 0, feature_bad = 0;

  for (int t = 0; t < kClusteringGraphs; ++t) {
    const int n = 1 + static_cast<int>(rng() % kClusteringMaxNodes);
    const double p = static_cast<double>(rng() % 1000) / 1000.0 * 0.5;
    std::bernoulli_distribution coin(p);
    oracle::EdgeList edges;
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        if (coin(rng)) edges.emplace_back(a, b);
      }
    }
    std::shuffle(edges.begin(), edges.end(), rng);
    SocialGraph g;
    for (int i = 0; i < n; ++i) g.add_account({AccountId("v" + std::to_string(i)), 0, Label::unknown});
    for (auto [a, b] : edges) g.add_edge(static_cast<NodeId>(a), static_cast<NodeId>(b), 1, static_cast<NodeId>(a));
    const auto want = oracle::clustering_by_enumeration(n, edges);
    for (int v = 0; v < n; ++v) {
      if (g.local_clustering(static_cast<NodeId>(v)) != want[v]) {
        ++clustering_bad;
        break;
      }
    }
  }

  for (int t = 0; t < kComponentGraphs; ++t) {
    const int n = 1 + static_cast<int>(rng() % kComponentMaxNodes);
    const auto m = rng() % static_cast<std::uint64_t>(n + n / 2 + 1);
    std::set<std::pair<int, int>> seen;
    oracle::EdgeList edges;
    for (std::uint64_t k = 0; k < m && n > 1; ++k) {
      const int a = static_cast<int>(rng() % n), b = static_cast<int>(rng() % n);
      if (a != b && seen.emplace(std::min(a, b), std::max(a, b)).second) edges.emplace_back(a, b);
    }
    auto name = [](int i) { return AccountId(fmt("s%06d", i)); };
    SybilSubgraph sg;
    for (int i = 0; i < n; ++i) sg.nodes.push_back({name(i), 0, Label::sybil});
    for (auto [a, b] : edges) sg.edges.push_back({name(std::min(a, b)), name(std::max(a, b)), 1, name(a)});
    const auto got = connected_components(sg);
    const auto want = oracle::components_by_bfs(n, edges);
    bool same = got.size() == want.size();
    for (std::size_t c = 0; same && c < got.size(); ++c) {
      same = got[c].size() == want[c].size();
      for (std::size_t i = 0; same && i < got[c].size(); ++i) same = got[c][i] == name(want[c][i]);
    }
    component_bad += !same;
  }

  std::size_t feature_checks = 0;
  for (int t = 0; t < kFeatureStreams; ++t) {
    const auto ev = oracle::random_stream(rng, 1 + rng() % kFeatureStreamEvents);
    const FeatureConfig fc{static_cast<Timestamp>(600 + rng() % 7200), 1 + rng() % 6};
    FeatureState st(fc);
    std::vector<Event> prefix;
    bool ok = true;
    for (std::size_t i = 0; i < ev.size() && ok; ++i) {
      st.apply_event(ev[i]);
      prefix.push_back(ev[i]);
      // Every event late in the stream, every 7th before that.
      if (ev[i].type == EventType::account_created || (i + 500 < ev.size() && i % 7 != 0)) continue;
      for (const auto& who : {ev[i].actor, *ev[i].target}) {
        ++feature_checks;
        ok = ok && st.snapshot(who, ev[i].ts) == oracle::batch_features(prefix, who, ev[i].ts, fc);
      }
    }
    feature_bad += !ok;
  }

  // Checkpoint at a fixed event, resume, compare with the uninterrupted run.
  const auto log = scratch.write_log("ckpt_events.jsonl", generate(SimConfig{}).events);
  const auto cfg = ClassifierConfig::defaults();
  DetectOptions full{log, scratch.dir / "ckpt_full"};
  run_detect(full, cfg);
  DetectOptions part{log, scratch.dir / "ckpt_part"};
  part.checkpoint_after = kCheckpointAt;
  part.checkpoint_path = scratch.dir / "ckpt.json";
  run_detect(part, cfg);
  DetectOptions rest{log, scratch.dir / "ckpt_part"};
  rest.resume_from = scratch.dir / "ckpt.json";
  run_detect(rest, cfg);
  const bool resume_same =
      read_file(full.out_dir / kVerdictFile) == read_file(part.out_dir / kVerdictFile) &&
      read_file(full.out_dir / kBanFile) == read_file(part.out_dir / kBanFile);

  return {clustering_bad == 0 && component_bad == 0 && feature_bad == 0 && resume_same,
          fmt("clustering %d/%d graphs, components %d/%d graphs, features %d/%d streams "
              "(%zu snapshots), resume@%llu byte-identical=%s",
              kClusteringGraphs - clustering_bad, kClusteringGraphs, kComponentGraphs - component_bad,
              kComponentGraphs, kFeatureStreams - feature_bad, kFeatureStreams, feature_checks,
              static_cast<unsigned long long>(kCheckpointAt), resume_same ? "yes" : "no")};
}

Outcome determinism(const Scratch& scratch) {
  auto log_bytes = [] {
    std::ostringstream os;
    const auto out = generate(SimConfig{});
    write_event_log(os, out.events);
    write_ground_truth(os, out);
    return os.str();
  };
  const auto a = log_bytes();
  const bool logs_same = a == log_bytes();

  const auto p = scratch.write_log("det_events.jsonl", generate(SimConfig{}).events);
  const auto cfg = ClassifierConfig::defaults();
  DetectOptions one{p, scratch.dir / "det_a"}, two{p, scratch.dir / "det_b"};
  run_detect(one, cfg);
  run_detect(two, cfg);
  const bool outputs_same =
      read_file(one.out_dir / kVerdictFile) == read_file(two.out_dir / kVerdictFile) &&
      read_file(one.out_dir / kBanFile) == read_file(two.out_dir / kBanFile);
  return {logs_same && outputs_same,
          fmt("generate twice identical=%s (%zu bytes); run_detect twice identical=%s",
              logs_same ? "yes" : "no", a.size(), outputs_same ? "yes" : "no")};
}

Outcome efficiency(const Scratch& scratch) {
  SimConfig c;
  c.n_normal = kThroughputNormals;
  c.n_sybil = kThroughputSybils;
  const auto out = generate(c);
  const auto log = scratch.write_log("big_events.jsonl", out.events);
  const auto t0 = Clock::now();
  const auto m = run_detect({log, scratch.dir / "big"}, ClassifierConfig::defaults());
  const double total = since(t0);
  return {out.events.size() >= kThroughputMinEvents && m.events_per_second >= kMinEventsPerSecond &&
              total < kMaxDetectSeconds,
          fmt("events=%zu (>= %zu) throughput=%.0f events/s (>= %.0f), %.0f classify/s, "
              "total=%.2fs (< %.0fs), peak_rss=%llu kB",
              out.events.size(), kThroughputMinEvents, m.events_per_second, kMinEventsPerSecond,
              m.classify_per_second, total, kMaxDetectSeconds,
              static_cast<unsigned long long>(m.peak_rss_kb))};
}

Outcome online_offline(const Scratch& scratch) {
  const auto events = generate(SimConfig{}).events;
  const auto log = scratch.write_log("svc_events.jsonl", events);
  const auto cfg = ClassifierConfig::defaults();
  DetectOptions batch{log, scratch.dir / "svc_batch"};
  run_detect(batch, cfg);

  std::map<AccountId, Verdict> latest;
  {
    std::ifstream in(batch.out_dir / kVerdictFile);
    for (std::string line; std::getline(in, line);) {
      auto v = decode_verdict(line);
      latest.insert_or_assign(v.account, std::move(v));
    }
  }
  std::set<AccountId> banned;
  for (const auto& b : read_bans(batch.out_dir / kBanFile)) banned.insert(b.account);

  AppConfig app;
  app.classifier = cfg;
  DetectionService svc(app);
  std::mt19937_64 rng(8);
  std::size_t pos = 0, batches = 0;
  bool accepted_all = true;
  while (pos < events.size()) {
    const std::size_t n = std::min<std::size_t>(events.size() - pos, 1 + rng() % 20000);
    std::ostringstream body;
    write_event_log(body, std::span(events).subspan(pos, n));
    const auto r = svc.post_events(body.str());
    accepted_all = accepted_all && r.status == 202 && Json::parse(r.body)["accepted"] == n;
    pos += n;
    ++batches;
  }
  std::size_t mismatches = 0, accounts = 0;
  for (const auto& e : events) {
    if (e.type != EventType::account_created) continue;
    ++accounts;
    const auto j = Json::parse(svc.verdict(e.actor.str()).body);
    const auto it = latest.find(e.actor);
    const bool same_verdict = it == latest.end() ? j["verdict"].is_null()
                                                 : !j["verdict"].is_null() &&
                                                       verdict_from_json(j["verdict"]) == it->second;
    const bool same_ban = j["banned"].get<bool>() == (banned.count(e.actor) > 0);
    mismatches += !(same_verdict && same_ban);
  }
  return {accepted_all && mismatches == 0,
          fmt("%zu events in %zu batches, %zu accounts compared, mismatches=%zu", events.size(), batches,
              accounts, mismatches)};
}

}  // namespace

int main() {
  Scratch scratch;
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"detection_quality", detection_quality},
      {"isolated_fraction", isolated_fraction_target},
      {"looseness", looseness},
      {"accidental_edges", accidental_edges},
      {"oracle_equivalence", [&] { return oracle_equivalences(scratch); }},
      {"determinism", [&] { return determinism(scratch); }},
      {"efficiency", [&] { return efficiency(scratch); }},
      {"online_offline", [&] { return online_offline(scratch); }},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail
              << fmt(" [%.1fs]", since(t0)) << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : fmt("%d criteria failed", failures)) << std::endl;
  return failures == 0 ? 0 : 1;
}
