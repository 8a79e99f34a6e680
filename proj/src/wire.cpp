#include "sybilwatch/wire.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <unistd.h>

#include "sybilwatch/error.hpp"

namespace sybilwatch {

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(Errc::malformed_event, what); }

const Json& field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) malformed(std::string("missing field \"") + key + "\"");
  return *it;
}

std::string_view string_field(const Json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_string()) malformed(std::string("field \"") + key + "\" must be a string");
  return v.get_ref<const std::string&>();
}

AccountId account_field(const Json& j, const char* key) {
  auto s = string_field(j, key);
  if (!AccountId::is_valid(s)) malformed(std::string("field \"") + key + "\" is not a valid account id");
  return AccountId(s);
}

std::int64_t integer_field(const Json& j, const char* key) {
  const auto& v = field(j, key);
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      malformed(std::string("field \"") + key + "\" out of range");
    }
    return static_cast<std::int64_t>(u);
  }
  if (!v.is_number_integer()) malformed(std::string("field \"") + key + "\" must be an integer");
  return v.get<std::int64_t>();
}

Json parse_object(std::string_view line) {
  Json j = Json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded()) malformed("invalid JSON");
  if (!j.is_object()) malformed("record must be a JSON object");
  return j;
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> number_or_null(const Json& j, const char* key) {
  const auto& v = field(j, key);
  if (v.is_null()) return std::nullopt;
  if (!v.is_number()) malformed(std::string("field \"") + key + "\" must be a number or null");
  return v.get<double>();
}

Event event_from_json(const Json& j) {
  auto type = parse_event_type(string_field(j, "type"));
  if (!type) malformed("unknown event type \"" + std::string(string_field(j, "type")) + "\"");
  const auto ts = integer_field(j, "ts");
  if (ts < 0) malformed("negative ts");

  if (*type == EventType::account_created) {
    std::optional<Label> label;
    if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
      if (!it->is_string()) malformed("label must be a string");
      label = parse_label(it->get_ref<const std::string&>());
      if (!label) malformed("unknown label \"" + it->get<std::string>() + "\"");
    }
    return Event::account_created(ts, account_field(j, "id"), label);
  }
  auto from = account_field(j, "from");
  auto to = account_field(j, "to");
  if (from == to) malformed("request from an account to itself");
  return Event{*type, ts, std::move(from), std::move(to), std::nullopt};
}

}  // namespace

std::string encode_event(const Event& e) {
  Json j;
  j["type"] = to_string(e.type);
  j["ts"] = e.ts;
  if (e.type == EventType::account_created) {
    j["id"] = e.actor.str();
    if (e.label) j["label"] = to_string(*e.label);
  } else {
    j["from"] = e.actor.str();
    j["to"] = e.target->str();
  }
  return j.dump();
}

Event decode_event(std::string_view line) { return event_from_json(parse_object(line)); }

IngestResult ingest(std::istream& in, bool strict) {
  IngestResult result;
  std::vector<std::size_t> line_of;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      if (line.find_first_not_of(" \t") == std::string::npos) malformed("blank line");
      result.events.push_back(decode_event(line));
      line_of.push_back(number);
    } catch (const Error& err) {
      if (strict) throw Error(Errc::parse_error, "line " + std::to_string(number) + ": " + err.what());
      ++result.skipped;
      result.issues.push_back(IngestIssue{number, err.what()});
    }
  }
  if (in.bad()) throw Error(Errc::io_error, "read failed");

  if (!std::is_sorted(result.events.begin(), result.events.end(),
                      [](const Event& a, const Event& b) { return a.ts < b.ts; })) {
    std::vector<std::size_t> order(result.events.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return result.events[a].ts < result.events[b].ts;
    });
    std::vector<Event> sorted;
    sorted.reserve(order.size());
    for (auto i : order) sorted.push_back(std::move(result.events[i]));
    result.events = std::move(sorted);
  }
  return result;
}

IngestResult ingest_file(const std::filesystem::path& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  return ingest(in, strict);
}

void write_event_log(std::ostream& out, std::span<const Event> events) {
  for (const auto& e : events) out << encode_event(e) << '\n';
}

void write_ground_truth(std::ostream& out, const SimOutput& sim) {
  const auto labels = sim.truth.label_map();
  for (const auto& e : sim.events) {
    if (e.type != EventType::account_created) continue;
    out << encode_event(Event::account_created(e.ts, e.actor, labels.at(e.actor))) << '\n';
  }
  auto edges = [&](const std::vector<AccountPair>& list, const char* origin) {
    for (const auto& p : list) {
      Json j;
      j["type"] = "sybil_edge";
      j["a"] = p.first.str();
      j["b"] = p.second.str();
      j["origin"] = origin;
      out << j.dump() << '\n';
    }
  };
  edges(sim.truth.intentional_edges, "intentional");
  edges(sim.truth.accidental_edges, "accidental");
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  GroundTruth truth;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      const Json j = parse_object(line);
      if (string_field(j, "type") == "sybil_edge") {
        AccountPair pair(account_field(j, "a"), account_field(j, "b"));
        const auto origin = string_field(j, "origin");
        if (origin == "intentional") truth.intentional_edges.push_back(std::move(pair));
        else if (origin == "accidental") truth.accidental_edges.push_back(std::move(pair));
        else malformed("unknown origin");
        continue;
      }
      const Event e = event_from_json(j);
      if (e.type != EventType::account_created || !e.label) {
        malformed("ground truth holds labelled account_created records only");
      }
      truth.labels.emplace_back(e.actor, *e.label);
    } catch (const Error& err) {
      throw Error(Errc::parse_error, path.string() + " line " + std::to_string(number) + ": " + err.what());
    }
  }
  return truth;
}

Json feature_vector_to_json(const FeatureVector& fv) {
  Json j;
  j["invite_rate"] = fv.invite_rate;
  j["outgoing_accept_ratio"] = optional_number(fv.outgoing_accept_ratio);
  j["incoming_request_count"] = fv.incoming_request_count;
  j["local_clustering"] = optional_number(fv.local_clustering);
  j["outgoing_sent_total"] = fv.outgoing_sent_total;
  return j;
}

FeatureVector feature_vector_from_json(const Json& j) {
  FeatureVector fv;
  fv.invite_rate = number_or_null(j, "invite_rate").value_or(0.0);
  fv.outgoing_accept_ratio = number_or_null(j, "outgoing_accept_ratio");
  fv.incoming_request_count = static_cast<std::uint64_t>(integer_field(j, "incoming_request_count"));
  fv.local_clustering = number_or_null(j, "local_clustering");
  fv.outgoing_sent_total = static_cast<std::uint64_t>(integer_field(j, "outgoing_sent_total"));
  return fv;
}

Json verdict_to_json(const Verdict& v) {
  Json j;
  j["account"] = v.account.str();
  j["at"] = v.at;
  j["decision"] = to_string(v.decision);
  j["matched_rules"] = v.matched_rules;
  j["features"] = feature_vector_to_json(v.features);
  return j;
}

Verdict verdict_from_json(const Json& j) {
  Verdict v{account_field(j, "account"), Decision::benign, {}, {}, integer_field(j, "at")};
  const auto decision = string_field(j, "decision");
  if (decision == "sybil") v.decision = Decision::sybil;
  else if (decision != "benign") malformed("unknown decision");
  const auto& rules = field(j, "matched_rules");
  if (!rules.is_array()) malformed("matched_rules must be an array");
  for (const auto& r : rules) v.matched_rules.push_back(r.get<std::uint32_t>());
  v.features = feature_vector_from_json(field(j, "features"));
  return v;
}

std::string encode_verdict(const Verdict& v) { return verdict_to_json(v).dump(); }
Verdict decode_verdict(std::string_view line) { return verdict_from_json(parse_object(line)); }

std::string encode_ban(const Ban& b) {
  Json j;
  j["account"] = b.account.str();
  j["flagged_at"] = b.flagged_at;
  return j.dump();
}

Ban decode_ban(std::string_view line) {
  const Json j = parse_object(line);
  return Ban{account_field(j, "account"), integer_field(j, "flagged_at")};
}

std::vector<Ban> read_bans(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::vector<Ban> bans;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) bans.push_back(decode_ban(line));
  }
  return bans;
}

Json report_to_json(const TopologyReport& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["total_sybils"] = r.total_sybils;
  j["sybil_edge_count"] = r.sybil_edge_count;
  j["isolated_count"] = r.isolated_count;
  j["isolated_fraction"] = optional_number(r.isolated_fraction);
  j["loose_component_count"] = r.loose_component_count;
  j["size_weighted_mean_density"] = optional_number(r.size_weighted_mean_density);
  j["incidental_edge_fraction"] = optional_number(r.incidental_edge_fraction);
  Json gaps = Json::array();
  for (const auto& [hour, count] : r.edge_time_gap_hours) gaps.push_back(Json::array({hour, count}));
  j["edge_time_gap_hours"] = std::move(gaps);
  Json comps = Json::array();
  for (const auto& c : r.components) {
    Json cj;
    cj["size"] = c.size;
    cj["edge_count"] = c.edge_count;
    cj["density"] = optional_number(c.density);
    cj["mean_local_clustering"] = optional_number(c.mean_local_clustering);
    cj["loose"] = c.loose;
    cj["first_member"] = c.first_member.str();
    comps.push_back(std::move(cj));
  }
  j["components"] = std::move(comps);
  return j;
}

TopologyReport report_from_json(const Json& j) {
  TopologyReport r;
  r.total_sybils = static_cast<std::size_t>(integer_field(j, "total_sybils"));
  r.sybil_edge_count = static_cast<std::size_t>(integer_field(j, "sybil_edge_count"));
  r.isolated_count = static_cast<std::size_t>(integer_field(j, "isolated_count"));
  r.isolated_fraction = number_or_null(j, "isolated_fraction");
  r.loose_component_count = static_cast<std::size_t>(integer_field(j, "loose_component_count"));
  r.size_weighted_mean_density = number_or_null(j, "size_weighted_mean_density");
  r.incidental_edge_fraction = number_or_null(j, "incidental_edge_fraction");
  for (const auto& g : field(j, "edge_time_gap_hours")) {
    r.edge_time_gap_hours[g.at(0).get<std::int64_t>()] = g.at(1).get<std::uint64_t>();
  }
  for (const auto& cj : field(j, "components")) {
    ComponentStats c;
    c.size = static_cast<std::size_t>(integer_field(cj, "size"));
    c.edge_count = static_cast<std::size_t>(integer_field(cj, "edge_count"));
    c.density = number_or_null(cj, "density");
    c.mean_local_clustering = number_or_null(cj, "mean_local_clustering");
    c.loose = field(cj, "loose").get<bool>();
    c.first_member = account_field(cj, "first_member");
    r.components.push_back(std::move(c));
  }
  return r;
}

AtomicFileWriter::AtomicFileWriter(std::filesystem::path target) : target_(std::move(target)) {
  temp_ = target_;
  temp_ += ".tmp." + std::to_string(::getpid());
  out_.open(temp_, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(Errc::io_error, "cannot create " + temp_.string());
}

AtomicFileWriter::~AtomicFileWriter() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(temp_, ec);
  }
}

void AtomicFileWriter::commit() {
  out_.flush();
  if (!out_) throw Error(Errc::io_error, "write failed for " + temp_.string());
  out_.close();
  std::error_code ec;
  std::filesystem::rename(temp_, target_, ec);
  if (ec) throw Error(Errc::io_error, "rename to " + target_.string() + ": " + ec.message());
  committed_ = true;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  AtomicFileWriter w(path);
  w.stream().write(content.data(), static_cast<std::streamsize>(content.size()));
  w.commit();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sybilwatch
