#pragma once

// Internal JSON conversions shared by the runner (snapshot log) and the
// report emitter/loader.

#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "flowdrift/evaluation.hpp"
#include "flowdrift/protocol.hpp"

namespace flowdrift::detail {

using ordered_json = nlohmann::ordered_json;

inline ordered_json nan_to_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

inline double null_to_nan(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

inline ordered_json double_array(const std::vector<double>& v) {
  ordered_json a = ordered_json::array();
  for (double x : v) a.push_back(nan_to_null(x));
  return a;
}

inline std::vector<double> double_array_from(const nlohmann::json& a) {
  std::vector<double> v;
  v.reserve(a.size());
  for (const auto& x : a) v.push_back(null_to_nan(x));
  return v;
}

inline ordered_json snapshot_to_json(const EvalSnapshot& s,
                                     bool include_wall) {
  ordered_json j;
  j["model_id"] = s.model_id;
  j["test_set_id"] = s.test_set_id;
  j["batch_index"] = s.batch_index;
  j["tp"] = s.counts.tp;
  j["tn"] = s.counts.tn;
  j["fp"] = s.counts.fp;
  j["fn"] = s.counts.fn;
  j["accuracy"] = s.accuracy;
  j["precision"] = s.precision;
  j["recall"] = s.recall;
  j["f1"] = s.f1;
  j["auroc"] = s.auroc ? ordered_json(*s.auroc) : ordered_json(nullptr);
  if (include_wall) j["wall_seconds"] = s.wall_seconds;
  return j;
}

inline EvalSnapshot snapshot_from_json(const nlohmann::json& j) {
  EvalSnapshot s;
  s.model_id = j.at("model_id").get<std::string>();
  s.test_set_id = j.at("test_set_id").get<std::string>();
  s.batch_index = j.at("batch_index").get<long>();
  s.counts.tp = j.at("tp").get<std::uint64_t>();
  s.counts.tn = j.at("tn").get<std::uint64_t>();
  s.counts.fp = j.at("fp").get<std::uint64_t>();
  s.counts.fn = j.at("fn").get<std::uint64_t>();
  s.accuracy = j.at("accuracy").get<double>();
  s.precision = j.at("precision").get<double>();
  s.recall = j.at("recall").get<double>();
  s.f1 = j.at("f1").get<double>();
  if (!j.at("auroc").is_null()) s.auroc = j.at("auroc").get<double>();
  if (j.contains("wall_seconds")) {
    s.wall_seconds = j.at("wall_seconds").get<double>();
  }
  return s;
}

inline ordered_json curve_to_json(const ForgettingCurve& c) {
  ordered_json j;
  j["model_id"] = c.model_id;
  j["baseline_accuracy"] = c.baseline_accuracy;
  j["batch_indices"] = c.batch_indices;
  j["offline_accuracy"] = double_array(c.offline_accuracy);
  j["incoming_accuracy"] = double_array(c.incoming_accuracy);
  j["forgetting"] = double_array(c.forgetting);
  j["f1"] = double_array(c.f1);
  j["precision"] = double_array(c.precision);
  j["recall"] = double_array(c.recall);
  j["auroc"] = double_array(c.auroc);
  j["accuracy_ascending"] = c.accuracy_ascending;
  return j;
}

inline ForgettingCurve curve_from_json(const nlohmann::json& j) {
  ForgettingCurve c;
  c.model_id = j.at("model_id").get<std::string>();
  c.baseline_accuracy = j.at("baseline_accuracy").get<double>();
  c.batch_indices = j.at("batch_indices").get<std::vector<long>>();
  c.offline_accuracy = double_array_from(j.at("offline_accuracy"));
  c.incoming_accuracy = double_array_from(j.at("incoming_accuracy"));
  c.forgetting = double_array_from(j.at("forgetting"));
  c.f1 = double_array_from(j.at("f1"));
  c.precision = double_array_from(j.at("precision"));
  c.recall = double_array_from(j.at("recall"));
  c.auroc = double_array_from(j.at("auroc"));
  c.accuracy_ascending =
      j.at("accuracy_ascending").get<std::vector<std::size_t>>();
  return c;
}

inline ordered_json stats_to_json(const DatasetStats& s) {
  ordered_json rows = ordered_json::array();
  for (const auto& [key, count] : s.by_origin_attack) {
    rows.push_back({{"origin", key.first},
                    {"attack_type", key.second},
                    {"flows", count}});
  }
  ordered_json j;
  j["rows"] = std::move(rows);
  j["benign"] = s.benign;
  j["malicious"] = s.malicious;
  return j;
}

inline DatasetStats stats_from_json(const nlohmann::json& j) {
  DatasetStats s;
  for (const auto& row : j.at("rows")) {
    s.by_origin_attack[{row.at("origin").get<std::string>(),
                        row.at("attack_type").get<std::string>()}] =
        row.at("flows").get<std::uint64_t>();
  }
  s.benign = j.at("benign").get<std::uint64_t>();
  s.malicious = j.at("malicious").get<std::uint64_t>();
  return s;
}

inline ordered_json config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["offline_data"] = c.offline_data;
  j["incoming_data"] = c.incoming_data;
  j["output_dir"] = c.output_dir;
  j["model"] = c.model;
  j["eta"] = c.effective_eta();
  j["l2"] = c.l2;
  j["epochs"] = c.effective_epochs();
  j["hidden1"] = c.hidden1;
  j["hidden2"] = c.hidden2;
  j["batch_size"] = c.batch_size;
  j["train_fraction"] = c.train_fraction;
  j["seed"] = c.seed;
  j["eval_every_k_batches"] = c.eval_every_k_batches;
  j["early_stop.enabled"] = c.early_stop.enabled;
  j["early_stop.max_forgetting"] = c.early_stop.max_forgetting;
  j["early_stop.patience"] = c.early_stop.patience;
  j["lwf.enabled"] = c.lwf.enabled;
  j["lwf.lambda"] = c.lwf.lambda;
  j["lwf.temperature"] = c.lwf.temperature;
  j["clip_normalize"] = c.clip_normalize;
  j["shuffle_incremental"] = c.shuffle_incremental;
  j["split_shuffle"] = c.split_shuffle;
  j["class_weight"] = c.class_weight;
  j["resample_minority"] = c.resample_minority;
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.offline_data = j.at("offline_data").get<std::string>();
  c.incoming_data = j.at("incoming_data").get<std::string>();
  c.output_dir = j.at("output_dir").get<std::string>();
  c.model = j.at("model").get<std::string>();
  c.eta = j.at("eta").get<double>();
  c.l2 = j.at("l2").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.hidden1 = j.at("hidden1").get<int>();
  c.hidden2 = j.at("hidden2").get<int>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.train_fraction = j.at("train_fraction").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.eval_every_k_batches = j.at("eval_every_k_batches").get<int>();
  c.early_stop.enabled = j.at("early_stop.enabled").get<bool>();
  c.early_stop.max_forgetting = j.at("early_stop.max_forgetting").get<double>();
  c.early_stop.patience = j.at("early_stop.patience").get<int>();
  c.lwf.enabled = j.at("lwf.enabled").get<bool>();
  c.lwf.lambda = j.at("lwf.lambda").get<double>();
  c.lwf.temperature = j.at("lwf.temperature").get<double>();
  c.clip_normalize = j.at("clip_normalize").get<bool>();
  c.shuffle_incremental = j.at("shuffle_incremental").get<bool>();
  c.split_shuffle = j.at("split_shuffle").get<bool>();
  c.class_weight = j.at("class_weight").get<std::string>();
  c.resample_minority = j.at("resample_minority").get<bool>();
  return c;
}

inline ordered_json incremental_to_json(const IncrementalResult& r) {
  ordered_json j;
  j["batches_run"] = r.batches_run;
  j["samples_consumed"] = r.samples_consumed;
  j["early_stopped"] = r.early_stopped;
  ordered_json snaps = ordered_json::array();
  for (const EvalSnapshot& s : r.snapshots) {
    snaps.push_back(snapshot_to_json(s, false));
  }
  j["snapshots"] = std::move(snaps);
  j["curve"] = curve_to_json(r.curve);
  ordered_json cps = ordered_json::array();
  for (const CheckpointEntry& e : r.checkpoints) {
    cps.push_back({{"path", e.path}, {"batch_index", e.batch_index}});
  }
  j["checkpoints"] = std::move(cps);
  return j;
}

inline IncrementalResult incremental_from_json(const nlohmann::json& j) {
  IncrementalResult r;
  r.batches_run = j.at("batches_run").get<std::size_t>();
  r.samples_consumed = j.at("samples_consumed").get<std::size_t>();
  r.early_stopped = j.at("early_stopped").get<bool>();
  for (const auto& s : j.at("snapshots")) {
    r.snapshots.push_back(snapshot_from_json(s));
  }
  r.curve = curve_from_json(j.at("curve"));
  for (const auto& e : j.at("checkpoints")) {
    r.checkpoints.push_back({e.at("path").get<std::string>(),
                             e.at("batch_index").get<long>()});
  }
  return r;
}

}  // namespace flowdrift::detail
