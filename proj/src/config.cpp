#include "sybilwatch/config.hpp"

#include <charconv>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sybilwatch/error.hpp"

namespace sybilwatch {

namespace {

std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw Error(Errc::invalid_config, key + ": cannot parse \"" + text + "\"");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error(Errc::invalid_config, key + ": expected true/false, got \"" + text + "\"");
}

std::vector<ThresholdRule> parse_rules(const std::string& text) {
  std::vector<ThresholdRule> rules;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    rules.push_back(ThresholdRule::parse(item));
  }
  return rules;
}

}  // namespace

AppConfig parse_config(const std::map<std::string, std::string>& kv) {
  AppConfig cfg;
  auto& s = cfg.sim;
  auto& c = cfg.classifier;
  for (const auto& [key, value] : kv) {
    auto d = [&] { return parse_number<double>(key, value); };
    auto u = [&] { return parse_number<std::uint64_t>(key, value); };
    if (key == "n_normal") s.n_normal = u();
    else if (key == "n_sybil") s.n_sybil = u();
    else if (key == "duration_hours") s.duration_hours = d();
    else if (key == "normal_invite_rate") s.normal_invite_rate = d();
    else if (key == "sybil_invite_rate") s.sybil_invite_rate = d();
    else if (key == "accept_prob_normal_from_normal") s.accept_prob_normal_from_normal = d();
    else if (key == "accept_prob_normal_from_sybil") s.accept_prob_normal_from_sybil = d();
    else if (key == "sybil_accept_prob") s.sybil_accept_prob = d();
    else if (key == "sybil_target_sybil_prob") s.sybil_target_sybil_prob = d();
    else if (key == "popularity_exponent") s.popularity_exponent = d();
    else if (key == "sybil_burst_size") s.sybil_burst_size = u();
    else if (key == "sybil_burst_span_seconds") s.sybil_burst_span_seconds = d();
    else if (key == "mean_response_delay_hours") s.mean_response_delay_hours = d();
    else if (key == "seed") s.seed = u();
    else if (key == "rules") c.rules = parse_rules(value);
    else if (key == "min_matches") c.min_matches = u();
    else if (key == "evaluation_trigger") {
      auto t = parse_trigger(value);
      if (!t) throw Error(Errc::invalid_config, "evaluation_trigger: unknown value \"" + value + "\"");
      c.trigger = *t;
    } else if (key == "window_seconds") c.features.window_seconds = parse_number<Timestamp>(key, value);
    else if (key == "min_sent") c.features.min_sent = u();
    else if (key == "burst_threshold") cfg.burst.threshold = u();
    else if (key == "burst_window_seconds") cfg.burst.window_seconds = parse_number<Timestamp>(key, value);
    else if (key == "loose_density") cfg.loose.density = d();
    else if (key == "loose_clustering") cfg.loose.clustering = d();
    else if (key == "strict") cfg.strict = parse_bool(key, value);
    else throw Error(Errc::invalid_config, "unknown key \"" + key + "\"");
  }
  s.validate();
  c.validate();
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(Errc::invalid_config, e.what());
  }
  std::map<std::string, std::string> kv;
  for (const auto& [key, node] : tree) {
    if (!node.empty()) throw Error(Errc::invalid_config, "sections are not supported: [" + key + "]");
    kv[key] = node.data();
  }
  return parse_config(kv);
}

std::string render_config(const AppConfig& cfg) {
  const auto& s = cfg.sim;
  const auto& c = cfg.classifier;
  std::ostringstream out;
  out << "# workload\n"
      << "n_normal = " << s.n_normal << "\n"
      << "n_sybil = " << s.n_sybil << "\n"
      << "duration_hours = " << format_double(s.duration_hours) << "\n"
      << "normal_invite_rate = " << format_double(s.normal_invite_rate) << "\n"
      << "sybil_invite_rate = " << format_double(s.sybil_invite_rate) << "\n"
      << "accept_prob_normal_from_normal = " << format_double(s.accept_prob_normal_from_normal) << "\n"
      << "accept_prob_normal_from_sybil = " << format_double(s.accept_prob_normal_from_sybil) << "\n"
      << "sybil_accept_prob = " << format_double(s.sybil_accept_prob) << "\n"
      << "sybil_target_sybil_prob = " << format_double(s.sybil_target_sybil_prob) << "\n"
      << "popularity_exponent = " << format_double(s.popularity_exponent) << "\n"
      << "sybil_burst_size = " << s.sybil_burst_size << "\n"
      << "sybil_burst_span_seconds = " << format_double(s.sybil_burst_span_seconds) << "\n"
      << "mean_response_delay_hours = " << format_double(s.mean_response_delay_hours) << "\n"
      << "seed = " << s.seed << "\n"
      << "\n# classifier\n"
      << "rules = ";
  for (std::size_t i = 0; i < c.rules.size(); ++i) out << (i ? ", " : "") << c.rules[i].to_string();
  out << "\n"
      << "min_matches = " << c.min_matches << "\n"
      << "evaluation_trigger = " << to_string(c.trigger) << "\n"
      << "window_seconds = " << c.features.window_seconds << "\n"
      << "min_sent = " << c.features.min_sent << "\n"
      << "\n# topology\n"
      << "burst_threshold = " << cfg.burst.threshold << "\n"
      << "burst_window_seconds = " << cfg.burst.window_seconds << "\n"
      << "loose_density = " << format_double(cfg.loose.density) << "\n"
      << "loose_clustering = " << format_double(cfg.loose.clustering) << "\n"
      << "\nstrict = " << (cfg.strict ? "true" : "false") << "\n";
  return out.str();
}

std::uint64_t config_hash(const ClassifierConfig& c) {
  std::ostringstream out;
  for (const auto& r : c.rules) out << r.to_string() << ';';
  out << c.min_matches << ';' << to_string(c.trigger) << ';' << c.features.window_seconds << ';'
      << c.features.min_sent;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : out.str()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace sybilwatch
