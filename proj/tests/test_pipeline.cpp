#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "sybilwatch/checkpoint.hpp"
#include "sybilwatch/config.hpp"
#include "sybilwatch/error.hpp"
#include "sybilwatch/runner.hpp"
#include "sybilwatch/simulator.hpp"
#include "sybilwatch/wire.hpp"

using namespace sybilwatch;
namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path dir;
  fs::path log;
  std::vector<Event> events;

  explicit Workspace(const char* name) {
    dir = fs::temp_directory_path() / (std::string("sw_") + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    SimConfig c;
    c.n_normal = 400;
    c.n_sybil = 40;
    c.duration_hours = 24;
    events = generate(c).events;
    log = dir / "events.jsonl";
    AtomicFileWriter w(log);
    write_event_log(w.stream(), events);
    w.commit();
  }
  ~Workspace() { fs::remove_all(dir); }

  DetectOptions options(const std::string& out) const {
    DetectOptions o;
    o.log = log;
    o.out_dir = dir / out;
    return o;
  }
};

std::string verdicts(const fs::path& out) { return read_file(out / kVerdictFile); }
std::string bans(const fs::path& out) { return read_file(out / kBanFile); }

}  // namespace

TEST_CASE("run_detect outputs parse back and match the in-memory run") {
  Workspace ws("detect");
  const auto cfg = ClassifierConfig::defaults();
  const auto m = run_detect(ws.options("a"), cfg);
  const auto expected = process_stream(ws.events, cfg);

  std::vector<Verdict> read;
  std::ifstream in(ws.dir / "a" / kVerdictFile);
  for (std::string line; std::getline(in, line);) read.push_back(decode_verdict(line));
  CHECK(read == expected.verdicts);
  CHECK(read_bans(ws.dir / "a" / kBanFile) == expected.bans);

  CHECK(m.events_total == ws.events.size());
  CHECK(m.events_processed == ws.events.size());
  CHECK(m.verdicts == expected.verdicts.size());
  CHECK(m.sybil_verdicts + m.benign_verdicts == m.verdicts);
  CHECK(m.bans == expected.bans.size());
  CHECK(m.sybil_verdicts == m.bans);
  CHECK(m.peak_rss_kb > 0);
  const auto metrics = Json::parse(read_file(ws.dir / "a" / kMetricsFile));
  CHECK(metrics["events_processed"] == ws.events.size());
  CHECK(metrics["schema_version"] == kSchemaVersion);
}

TEST_CASE("run_detect is deterministic") {
  Workspace ws("determinism");
  const auto cfg = ClassifierConfig::defaults();
  run_detect(ws.options("a"), cfg);
  run_detect(ws.options("b"), cfg);
  CHECK(verdicts(ws.dir / "a") == verdicts(ws.dir / "b"));
  CHECK(bans(ws.dir / "a") == bans(ws.dir / "b"));
}

TEST_CASE("checkpoint and resume at any split point") {
  Workspace ws("resume");
  const auto cfg = ClassifierConfig::defaults();
  run_detect(ws.options("full"), cfg);
  for (std::uint64_t split : {std::uint64_t{0}, std::uint64_t{1}, std::uint64_t{440},
                              std::uint64_t{ws.events.size() / 3}, std::uint64_t{ws.events.size() - 1}}) {
    CAPTURE(split);
    auto first = ws.options("part");
    fs::remove_all(first.out_dir);
    first.checkpoint_after = split;
    first.checkpoint_path = ws.dir / "state.ckpt";
    const auto m1 = run_detect(first, cfg);
    CHECK(m1.checkpointed);
    CHECK(m1.events_processed == split);

    auto second = ws.options("part");
    second.resume_from = ws.dir / "state.ckpt";
    const auto m2 = run_detect(second, cfg);
    CHECK_FALSE(m2.checkpointed);
    CHECK(m2.events_processed == ws.events.size() - split);
    CHECK(verdicts(ws.dir / "part") == verdicts(ws.dir / "full"));
    CHECK(bans(ws.dir / "part") == bans(ws.dir / "full"));
  }
}

TEST_CASE("checkpoint state round-trips exactly") {
  Workspace ws("codec");
  const auto cfg = ClassifierConfig::defaults();
  StreamDetector d(cfg);
  std::vector<Verdict> out;
  for (std::size_t i = 0; i < ws.events.size() / 2; ++i) d.process(ws.events[i], out);
  const CheckpointMeta meta{ws.events.size() / 2, ws.events[ws.events.size() / 2 - 1].ts,
                            config_hash(cfg), out.size()};
  const auto j = checkpoint_to_json(d, meta);
  const auto loaded = checkpoint_from_json(Json::parse(j.dump()), cfg);
  CHECK(loaded.detector == d);
  CHECK(loaded.meta.events_applied == meta.events_applied);
  CHECK(loaded.meta.verdict_lines == meta.verdict_lines);
}

TEST_CASE("checkpoint refusal") {
  Workspace ws("refuse");
  const auto cfg = ClassifierConfig::defaults();
  auto first = ws.options("x");
  first.checkpoint_after = 1000;
  first.checkpoint_path = ws.dir / "state.ckpt";
  run_detect(first, cfg);

  auto expect = [&](const ClassifierConfig& c, Errc code) {
    auto o = ws.options("x");
    o.resume_from = ws.dir / "state.ckpt";
    try {
      run_detect(o, c);
      FAIL("expected a checkpoint error");
    } catch (const Error& e) {
      CHECK(e.code() == code);
    }
  };

  SUBCASE("different classifier config") {
    auto other = cfg;
    other.min_matches = 2;
    expect(other, Errc::checkpoint_mismatch);
  }
  SUBCASE("unknown format version") {
    auto j = Json::parse(read_file(ws.dir / "state.ckpt"));
    j["format_version"] = kCheckpointFormatVersion + 1;
    write_file_atomic(ws.dir / "state.ckpt", j.dump());
    expect(cfg, Errc::unsupported_checkpoint);
  }
  SUBCASE("verdict file does not line up") {
    std::ofstream(ws.dir / "x" / kVerdictFile, std::ios::app) << "{}\n";
    expect(cfg, Errc::checkpoint_mismatch);
  }
}

TEST_CASE("run_detect errors") {
  Workspace ws("errors");
  auto o = ws.options("e");
  o.log = ws.dir / "missing.jsonl";
  CHECK_THROWS_AS(run_detect(o, ClassifierConfig::defaults()), Error);

  // Lenient ingest skips a malformed line; strict aborts.
  std::ofstream(ws.log, std::ios::app) << "garbage\n";
  o = ws.options("e");
  CHECK(run_detect(o, ClassifierConfig::defaults()).skipped_lines == 1);
  o.strict = true;
  try {
    run_detect(o, ClassifierConfig::defaults());
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::parse_error);
  }
}
