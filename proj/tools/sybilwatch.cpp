// sybilwatch command-line front end.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "sybilwatch/config.hpp"
#include "sybilwatch/error.hpp"
#include "sybilwatch/graph.hpp"
#include "sybilwatch/runner.hpp"
#include "sybilwatch/service.hpp"
#include "sybilwatch/simulator.hpp"
#include "sybilwatch/topology.hpp"
#include "sybilwatch/wire.hpp"

namespace fs = std::filesystem;
using namespace sybilwatch;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool strict = false;
};

AppConfig resolve_config(const Globals& g) {
  AppConfig cfg;
  std::string path = g.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("SYBILWATCH_CONFIG"); env && *env) path = env;
  }
  if (!path.empty()) cfg = load_config(path);
  if (g.seed) cfg.sim.seed = *g.seed;
  if (g.strict) cfg.strict = true;
  return cfg;
}

LabelMap labels_from_bans(const SocialGraph& g, const fs::path& bans_path) {
  LabelMap labels;
  for (const auto& rec : g.accounts()) labels.emplace(rec.id, Label::normal);
  for (const auto& b : read_bans(bans_path)) labels[b.account] = Label::sybil;
  return labels;
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream os;
  os.precision(4);
  os << *v;
  return os.str();
}

void print_report(std::ostream& os, const TopologyReport& r) {
  os << "sybils:                 " << r.total_sybils << "\n"
     << "sybil-sybil edges:      " << r.sybil_edge_count << "\n"
     << "isolated sybils:        " << r.isolated_count << " (" << fmt_opt(r.isolated_fraction)
     << ")\n"
     << "components (size >= 2): ";
  std::size_t multi = 0;
  for (const auto& c : r.components) multi += c.size >= 2;
  os << multi << "\n"
     << "loose components:       " << r.loose_component_count << "\n"
     << "weighted mean density:  " << fmt_opt(r.size_weighted_mean_density) << "\n"
     << "incidental edges:       " << fmt_opt(r.incidental_edge_fraction) << "\n";
  std::size_t shown = 0;
  for (const auto& c : r.components) {
    if (c.size < 2 || shown == 10) break;
    ++shown;
    os << "  component " << c.first_member.str() << ": size " << c.size << ", edges "
       << c.edge_count << ", density " << fmt_opt(c.density) << ", clustering "
       << fmt_opt(c.mean_local_clustering) << (c.loose ? ", loose" : "") << "\n";
  }
  if (!r.edge_time_gap_hours.empty()) {
    os << "edge time after creation (hours -> edges):\n";
    for (const auto& [h, n] : r.edge_time_gap_hours) os << "  " << h << "\t" << n << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sybil detection over friend-request streams"};
  app.require_subcommand(1);

  Globals globals;
  app.add_option("--config", globals.config_path, "key = value config file (env: SYBILWATCH_CONFIG)");
  app.add_option("--seed", globals.seed, "Override the simulator seed");
  app.add_flag("--strict", globals.strict, "Abort on the first malformed input line");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic event log and ground truth");
  std::string sim_out = "events.jsonl";
  std::string sim_truth;
  std::optional<double> sim_isolation;
  sim->add_option("-o,--out", sim_out, "Event log path");
  sim->add_option("--truth", sim_truth, "Ground-truth file path");
  sim->add_option("--calibrate-isolation", sim_isolation,
                  "Tune Sybil-Sybil connectivity to this isolated fraction first");

  // detect
  auto* det = app.add_subcommand("detect", "Run the detector over an event log");
  DetectOptions det_opts;
  std::string det_log, det_out = "out", det_ckpt, det_resume;
  std::optional<std::uint64_t> det_after;
  det->add_option("log", det_log, "Event log")->required();
  det->add_option("-o,--out", det_out, "Output directory");
  det->add_option("--checkpoint-after", det_after, "Stop after N events and write a checkpoint");
  det->add_option("--checkpoint", det_ckpt, "Checkpoint path");
  det->add_option("--resume", det_resume, "Resume from a checkpoint");

  // analyze
  auto* ana = app.add_subcommand("analyze", "Topology report over labelled Sybils");
  std::string ana_log, ana_truth, ana_bans, ana_out;
  ana->add_option("log", ana_log, "Event log")->required();
  auto* truth_opt = ana->add_option("--truth", ana_truth, "Ground-truth labels file");
  auto* bans_opt = ana->add_option("--bans", ana_bans, "Ban file from detect (banned = Sybil)");
  truth_opt->excludes(bans_opt);
  ana->add_option("-o,--out", ana_out, "Report path (default: stdout)");

  // report
  auto* rep = app.add_subcommand("report", "Print a topology report in readable form");
  std::string rep_in;
  rep->add_option("report", rep_in, "Report JSON from analyze")->required();

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Fit rule thresholds on a labelled log");
  std::string cal_log, cal_truth, cal_out;
  std::optional<double> cal_fpr;
  cal->add_option("log", cal_log, "Training event log")->required();
  cal->add_option("--truth", cal_truth, "Ground-truth labels file")->required();
  cal->add_option("-o,--out", cal_out, "Write the resulting config here (default: stdout)");
  cal->add_option("--max-fpr", cal_fpr, "False-positive bound when choosing k");

  // serve
  auto* srv = app.add_subcommand("serve", "Run the HTTP scoring service");
  std::string host = "127.0.0.1";
  int port = 8080;
  srv->add_option("--host", host, "Bind address");
  srv->add_option("--port", port, "Port");

  CLI11_PARSE(app, argc, argv);

  try {
    AppConfig cfg = resolve_config(globals);

    if (*sim) {
      SimConfig sc = cfg.sim;
      if (sim_isolation) {
        sc = calibrate_isolation(sc, *sim_isolation);
        std::cerr << "calibrated: sybil_invite_rate=" << sc.sybil_invite_rate
                  << " sybil_target_sybil_prob=" << sc.sybil_target_sybil_prob
                  << " sybil_accept_prob=" << sc.sybil_accept_prob << "\n";
      }
      const auto out = generate(sc);
      {
        AtomicFileWriter w(sim_out);
        write_event_log(w.stream(), out.events);
        w.commit();
      }
      if (!sim_truth.empty()) {
        AtomicFileWriter w(sim_truth);
        write_ground_truth(w.stream(), out);
        w.commit();
      }
      std::cerr << out.events.size() << " events written to " << sim_out << "\n";
    } else if (*det) {
      det_opts.log = det_log;
      det_opts.out_dir = det_out;
      det_opts.strict = cfg.strict;
      det_opts.checkpoint_after = det_after;
      if (!det_ckpt.empty()) det_opts.checkpoint_path = det_ckpt;
      if (!det_resume.empty()) det_opts.resume_from = det_resume;
      const auto m = run_detect(det_opts, cfg.classifier);
      std::cout << metrics_to_json(m).dump(2) << "\n";
    } else if (*ana) {
      if (ana_truth.empty() && ana_bans.empty()) {
        throw Error(Errc::invalid_config, "analyze needs --truth or --bans");
      }
      const auto ingested = ingest_file(ana_log, cfg.strict);
      const auto g = graph_from_events(ingested.events);
      const LabelMap labels = ana_truth.empty() ? labels_from_bans(g, ana_bans)
                                                : read_ground_truth(ana_truth).label_map();
      const auto sg = extract_sybil_subgraph(g, labels, !ana_truth.empty());
      const auto formations = classify_edge_formation(sg, ingested.events, cfg.burst);
      const auto doc = report_to_json(report(sg, cfg.loose, formations)).dump(2) + "\n";
      if (ana_out.empty()) {
        std::cout << doc;
      } else {
        write_file_atomic(ana_out, doc);
      }
    } else if (*rep) {
      const auto j = Json::parse(read_file(rep_in), nullptr, false);
      if (j.is_discarded()) throw Error(Errc::parse_error, rep_in + ": not JSON");
      print_report(std::cout, report_from_json(j));
    } else if (*cal) {
      const auto ingested = ingest_file(cal_log, cfg.strict);
      const auto truth = read_ground_truth(cal_truth).label_map();
      ThresholdCalibration opts;
      if (cal_fpr) opts.max_fpr = *cal_fpr;
      const auto tmpl = default_rule_template();
      cfg.classifier = calibrate_thresholds(ingested.events, truth, tmpl, cfg.classifier, opts);
      const auto text = render_config(cfg);
      if (cal_out.empty()) {
        std::cout << text;
      } else {
        write_file_atomic(cal_out, text);
      }
    } else if (*srv) {
      std::cerr << "listening on " << host << ":" << port << "\n";
      serve(cfg, host, port);
    }
  } catch (const std::exception& e) {
    std::cerr << "sybilwatch: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
