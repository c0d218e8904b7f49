// flowdrift CLI: packet traces -> flow features -> offline + incremental
// intrusion-detection experiments.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "flowdrift/errors.hpp"
#include "flowdrift/evaluation.hpp"
#include "flowdrift/feature_io.hpp"
#include "flowdrift/features.hpp"
#include "flowdrift/flow.hpp"
#include "flowdrift/packet.hpp"
#include "flowdrift/preprocess.hpp"
#include "flowdrift/protocol.hpp"
#include "flowdrift/synthetic.hpp"

namespace fs = std::filesystem;
using namespace flowdrift;

namespace {

int parse_proto_token(const std::string& token) {
  if (token == "ARP" || token == "arp") return kProtoArp;
  if (token == "ICMP" || token == "icmp") return kProtoIcmp;
  if (token == "TCP" || token == "tcp") return kProtoTcp;
  if (token == "UDP" || token == "udp") return kProtoUdp;
  try {
    return std::stoi(token);
  } catch (...) {
    throw CLI::ValidationError("unknown protocol '" + token + "'");
  }
}

void print_snapshot(const EvalSnapshot& snap) {
  std::printf("%-12s %-14s batch %-4ld acc %.4f  f1 %.4f  prec %.4f  "
              "recall %.4f  auroc %s\n",
              snap.model_id.c_str(), snap.test_set_id.c_str(),
              snap.batch_index, snap.accuracy, snap.f1, snap.precision,
              snap.recall,
              snap.auroc ? std::to_string(*snap.auroc).c_str() : "n/a");
}

// Config file first, then any flag the user actually passed on top.
struct ConfigCli {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "flat key=value config file");
    overrides.reserve(ExperimentConfig::known_keys().size());
    for (const std::string& key : ExperimentConfig::known_keys()) {
      overrides.emplace_back(key, "");
      auto& slot = overrides.back().second;
      cmd->add_option("--" + key, slot, "config key " + key);
    }
  }

  ExperimentConfig build(const CLI::App* cmd) const {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = ExperimentConfig::from_file(config_path);
    }
    for (const auto& [key, value] : overrides) {
      if (cmd->count("--" + key) > 0) cfg.set(key, value);
    }
    cfg.validate();
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flow feature extraction and incremental IDS experiments"};
  app.require_subcommand(1);

  // extract ------------------------------------------------------------
  auto* extract_cmd = app.add_subcommand(
      "extract", "packets -> flow sessions -> labeled feature csv");
  std::string ex_input, ex_rules, ex_output;
  double ex_idle_timeout = kDefaultIdleTimeout;
  std::vector<std::string> ex_drop = {"ARP"};
  extract_cmd->add_option("--input", ex_input, "packet csv or jsonl")
      ->required();
  extract_cmd->add_option("--label-rules", ex_rules,
                          "labeler rules json (see README)")
      ->required();
  extract_cmd->add_option("--output", ex_output, "feature csv to write")
      ->required();
  extract_cmd->add_option("--idle-timeout", ex_idle_timeout,
                          "session idle timeout, seconds");
  extract_cmd->add_option("--drop-protocols", ex_drop,
                          "protocols to filter out (names or numbers)");

  // stats ---------------------------------------------------------------
  auto* stats_cmd =
      app.add_subcommand("stats", "per (origin, attack type) flow counts");
  std::string st_input, st_json;
  stats_cmd->add_option("--input", st_input, "feature csv")->required();
  stats_cmd->add_option("--json", st_json, "also write stats as json");

  // split ---------------------------------------------------------------
  auto* split_cmd =
      app.add_subcommand("split", "deterministic train/test split");
  std::string sp_input, sp_train_out, sp_test_out;
  double sp_fraction = 0.9;
  std::uint64_t sp_seed = 42;
  bool sp_shuffle = false;
  split_cmd->add_option("--input", sp_input, "feature csv")->required();
  split_cmd->add_option("--train-out", sp_train_out, "train csv")->required();
  split_cmd->add_option("--test-out", sp_test_out, "test csv")->required();
  split_cmd->add_option("--train-fraction", sp_fraction, "default 0.9");
  split_cmd->add_option("--seed", sp_seed, "shuffle seed");
  split_cmd->add_flag("--shuffle", sp_shuffle, "shuffle before cutting");

  // config-driven phases -------------------------------------------------
  auto* offline_cmd = app.add_subcommand(
      "train-offline", "offline phase: scaler fit, training, dual baseline");
  ConfigCli offline_cfg;
  offline_cfg.attach(offline_cmd);

  auto* incremental_cmd = app.add_subcommand(
      "train-incremental",
      "incremental phase, resuming from checkpoints in output_dir");
  ConfigCli incremental_cfg;
  incremental_cfg.attach(incremental_cmd);

  auto* protocol_cmd =
      app.add_subcommand("run-protocol", "all phases plus report emission");
  ConfigCli protocol_cfg;
  protocol_cfg.attach(protocol_cmd);
  bool proto_resume = false;
  protocol_cmd->add_flag("--resume", proto_resume,
                         "continue from checkpoints in output_dir");

  // report ----------------------------------------------------------------
  auto* report_cmd = app.add_subcommand(
      "report", "re-emit tables and curves from a stored report.json");
  std::string rp_input, rp_timing, rp_outdir;
  report_cmd->add_option("--input", rp_input, "report.json")->required();
  report_cmd->add_option("--timing", rp_timing, "timing.json");
  report_cmd->add_option("--output-dir", rp_outdir, "directory to write")
      ->required();

  // synth -------------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand(
      "synth", "seeded two-population drift dataset (feature csv pair)");
  std::string sy_offline, sy_incoming;
  std::size_t sy_samples = 10000;
  std::uint64_t sy_seed = 42;
  synth_cmd->add_option("--offline", sy_offline, "offline-population csv")
      ->required();
  synth_cmd->add_option("--incoming", sy_incoming, "incoming-population csv")
      ->required();
  synth_cmd->add_option("--samples", sy_samples, "samples per population");
  synth_cmd->add_option("--seed", sy_seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*extract_cmd) {
      auto packets = ex_input.ends_with(".jsonl")
                         ? read_packet_jsonl(ex_input)
                         : read_packet_csv(ex_input);
      FilterPolicy policy;
      policy.drop_protocols.clear();
      for (const std::string& token : ex_drop) {
        policy.drop_protocols.insert(parse_proto_token(token));
      }
      FilterResult filtered = filter_packets(packets, policy);
      for (const auto& [proto, count] : filtered.dropped_by_proto) {
        std::printf("dropped %zu %s packets\n", count,
                    proto_name(proto).c_str());
      }
      auto sessions = assemble(filtered.packets, ex_idle_timeout);
      RuleLabeler labeler = RuleLabeler::from_json_file(ex_rules);
      ExtractionResult result = extract_batch(sessions, labeler);
      write_feature_csv(result.samples, ex_output);
      std::printf("%zu packets -> %zu sessions -> %zu samples",
                  filtered.packets.size(), sessions.size(),
                  result.samples.size());
      if (result.unlabeled_dropped > 0) {
        std::printf(" (%zu unlabeled flows dropped)",
                    result.unlabeled_dropped);
      }
      std::printf("\n");
    } else if (*stats_cmd) {
      auto samples = read_feature_csv(st_input);
      DatasetStats stats = dataset_stats(samples);
      std::cout << render_stats(stats, "Dataset statistics: " + st_input);
      if (!st_json.empty()) {
        std::ofstream out(st_json);
        nlohmann::ordered_json j;
        for (const auto& [key, count] : stats.by_origin_attack) {
          j["rows"].push_back({{"origin", key.first},
                               {"attack_type", key.second},
                               {"flows", count}});
        }
        j["benign"] = stats.benign;
        j["malicious"] = stats.malicious;
        out << j.dump(2) << "\n";
      }
    } else if (*split_cmd) {
      auto samples = read_feature_csv(sp_input);
      auto [train, test] =
          split(std::move(samples), SplitPlan{sp_fraction, sp_seed, sp_shuffle});
      write_feature_csv(train, sp_train_out);
      write_feature_csv(test, sp_test_out);
      std::printf("train %zu -> %s\ntest  %zu -> %s\n", train.size(),
                  sp_train_out.c_str(), test.size(), sp_test_out.c_str());
    } else if (*offline_cmd) {
      ExperimentConfig cfg = offline_cfg.build(offline_cmd);
      ProtocolRunner runner(cfg);
      runner.load();
      OfflinePhaseResult result = runner.run_offline_phase();
      print_snapshot(result.offline_test);
      print_snapshot(result.incoming_test);
      std::printf("offline training: %zu samples x %zu epochs in %.3fs, "
                  "final loss %.6f\n",
                  runner.splits().offline_train, result.train.epochs,
                  result.train.wall_seconds, result.train.final_loss);
      std::printf("checkpoint: %s/%s\n", cfg.output_dir.c_str(),
                  result.checkpoint.path.c_str());
    } else if (*incremental_cmd) {
      ExperimentConfig cfg = incremental_cfg.build(incremental_cmd);
      if (!fs::exists(fs::path(cfg.output_dir) / "checkpoints/offline.json")) {
        throw SchemaError("no offline checkpoint under " + cfg.output_dir +
                          "; run train-offline first");
      }
      ProtocolRunner runner(cfg);
      runner.load();
      IncrementalOptions opts;
      opts.resume = true;
      ExperimentReport report = runner.run_all(opts);
      if (report.incremental) {
        for (const EvalSnapshot& snap : report.incremental->snapshots) {
          print_snapshot(snap);
        }
      }
      std::printf("report written to %s\n", cfg.output_dir.c_str());
    } else if (*protocol_cmd) {
      ExperimentConfig cfg = protocol_cfg.build(protocol_cmd);
      ProtocolRunner runner(cfg);
      runner.load();
      IncrementalOptions opts;
      opts.resume = proto_resume;
      ExperimentReport report = runner.run_all(opts);
      std::cout << render_tables(report);
      std::printf("report written to %s\n", cfg.output_dir.c_str());
    } else if (*report_cmd) {
      ExperimentReport report = load_report(rp_input, rp_timing);
      emit_reports(report, rp_outdir);
      std::printf("re-emitted report under %s\n", rp_outdir.c_str());
    } else if (*synth_cmd) {
      DriftGenerator gen(sy_seed);
      write_feature_csv(
          gen.make(DriftGenerator::Population::kOffline, sy_samples),
          sy_offline);
      write_feature_csv(
          gen.make(DriftGenerator::Population::kIncoming, sy_samples),
          sy_incoming);
      std::printf("wrote %zu offline samples to %s and %zu incoming to %s\n",
                  sy_samples, sy_offline.c_str(), sy_samples,
                  sy_incoming.c_str());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
