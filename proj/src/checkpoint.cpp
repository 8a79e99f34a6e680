#include "sybilwatch/checkpoint.hpp"

#include <algorithm>
#include <cstdio>

#include "sybilwatch/config.hpp"
#include "sybilwatch/error.hpp"

namespace sybilwatch {

namespace {

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

}  // namespace

struct StateCodec {
  static Json encode(const StreamDetector& d) {
    const auto& fs = d.features_;
    const auto& g = fs.graph_;
    Json j;

    Json accounts = Json::array();
    for (const auto& a : g.accounts()) accounts.push_back(Json::array({a.id.str(), a.created_at}));
    j["accounts"] = std::move(accounts);

    Json edges = Json::array();
    for (const auto& e : g.edges()) edges.push_back(Json::array({e.u, e.v, e.created_at, e.initiator}));
    j["edges"] = std::move(edges);

    Json per_account = Json::array();
    for (const auto& st : fs.accounts_) {
      Json a;
      a["sent"] = st.sent_total;
      a["accepted"] = st.accepted_total;
      a["outgoing"] = Json(std::vector<Timestamp>(st.outgoing.begin(), st.outgoing.end()));
      a["incoming"] = Json(std::vector<Timestamp>(st.incoming.begin(), st.incoming.end()));
      per_account.push_back(std::move(a));
    }
    j["features"] = std::move(per_account);

    std::vector<std::pair<std::uint64_t, std::uint32_t>> pending(fs.pending_.begin(), fs.pending_.end());
    std::sort(pending.begin(), pending.end());
    Json pj = Json::array();
    for (const auto& [key, count] : pending) {
      pj.push_back(Json::array({key >> 32, key & 0xffffffffULL, count}));
    }
    j["pending"] = std::move(pj);
    j["last_applied_ts"] = fs.last_ts_ ? Json(*fs.last_ts_) : Json(nullptr);

    Json bans = Json::array();
    for (const auto& b : d.bans_) bans.push_back(Json::array({b.account.str(), b.flagged_at}));
    j["bans"] = std::move(bans);

    Json latest = Json::array();
    for (const auto& v : d.latest_) latest.push_back(v ? verdict_to_json(*v) : Json(nullptr));
    j["latest_verdicts"] = std::move(latest);
    j["events_applied"] = d.events_applied_;
    j["classify_calls"] = d.classify_calls_;
    return j;
  }

  static StreamDetector decode(const Json& j, const ClassifierConfig& cfg) {
    StreamDetector d(cfg);
    auto& fs = d.features_;
    for (const auto& a : j.at("accounts")) {
      fs.graph_.add_account(
          AccountRecord{AccountId(a.at(0).get<std::string>()), a.at(1).get<Timestamp>(), Label::unknown});
    }
    for (const auto& e : j.at("edges")) {
      fs.graph_.add_edge(e.at(0).get<NodeId>(), e.at(1).get<NodeId>(), e.at(2).get<Timestamp>(),
                         e.at(3).get<NodeId>());
    }
    for (const auto& a : j.at("features")) {
      auto& st = fs.accounts_.emplace_back();
      st.sent_total = a.at("sent").get<std::uint64_t>();
      st.accepted_total = a.at("accepted").get<std::uint64_t>();
      for (const auto& t : a.at("outgoing")) st.outgoing.push_back(t.get<Timestamp>());
      for (const auto& t : a.at("incoming")) st.incoming.push_back(t.get<Timestamp>());
    }
    if (fs.accounts_.size() != fs.graph_.account_count()) {
      throw Error(Errc::parse_error, "checkpoint feature table does not match accounts");
    }
    for (const auto& p : j.at("pending")) {
      const auto key = (p.at(0).get<std::uint64_t>() << 32) | p.at(1).get<std::uint64_t>();
      fs.pending_[key] = p.at(2).get<std::uint32_t>();
    }
    if (!j.at("last_applied_ts").is_null()) fs.last_ts_ = j.at("last_applied_ts").get<Timestamp>();

    const auto n = fs.graph_.account_count();
    d.banned_.assign(n, false);
    d.latest_.assign(n, std::nullopt);
    for (const auto& b : j.at("bans")) {
      Ban ban{AccountId(b.at(0).get<std::string>()), b.at(1).get<Timestamp>()};
      d.banned_[fs.graph_.require(ban.account)] = true;
      d.bans_.push_back(std::move(ban));
    }
    const auto& latest = j.at("latest_verdicts");
    if (latest.size() != n) throw Error(Errc::parse_error, "checkpoint verdict table does not match accounts");
    for (std::size_t i = 0; i < n; ++i) {
      if (!latest[i].is_null()) d.latest_[i] = verdict_from_json(latest[i]);
    }
    d.events_applied_ = j.at("events_applied").get<std::uint64_t>();
    d.classify_calls_ = j.at("classify_calls").get<std::uint64_t>();
    return d;
  }
};

Json checkpoint_to_json(const StreamDetector& detector, const CheckpointMeta& meta) {
  Json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["events_applied"] = meta.events_applied;
  j["last_applied_ts"] = meta.last_applied_ts;
  j["config_hash"] = hex64(meta.config_hash);
  j["verdict_lines"] = meta.verdict_lines;
  j["state"] = StateCodec::encode(detector);
  return j;
}

LoadedCheckpoint checkpoint_from_json(const Json& j, const ClassifierConfig& cfg) {
  if (!j.is_object() || !j.contains("format_version")) {
    throw Error(Errc::unsupported_checkpoint, "missing format_version");
  }
  const auto version = j.at("format_version");
  if (!version.is_number_integer() || version.get<int>() != kCheckpointFormatVersion) {
    throw Error(Errc::unsupported_checkpoint, "format_version " + version.dump());
  }
  try {
    CheckpointMeta meta;
    meta.events_applied = j.at("events_applied").get<std::uint64_t>();
    meta.last_applied_ts = j.at("last_applied_ts").get<Timestamp>();
    meta.verdict_lines = j.at("verdict_lines").get<std::uint64_t>();
    meta.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    if (meta.config_hash != config_hash(cfg)) {
      throw Error(Errc::checkpoint_mismatch, "checkpoint was written under a different classifier config");
    }
    return LoadedCheckpoint{meta, StateCodec::decode(j.at("state"), cfg)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const StreamDetector& detector,
                     const CheckpointMeta& meta) {
  write_file_atomic(path, checkpoint_to_json(detector, meta).dump() + "\n");
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const ClassifierConfig& cfg) {
  const auto text = read_file(path);
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::parse_error, "checkpoint is not valid JSON: " + path.string());
  return checkpoint_from_json(j, cfg);
}

}  // namespace sybilwatch
