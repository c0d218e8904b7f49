#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "flowdrift/evaluation.hpp"
#include "flowdrift/features.hpp"
#include "flowdrift/model.hpp"
#include "flowdrift/preprocess.hpp"

namespace flowdrift {

struct EarlyStopRule {
  bool enabled = false;
  double max_forgetting = 0.25;
  int patience = 3;
};

struct LwfSettings {
  bool enabled = false;
  double lambda = 1.0;
  double temperature = 2.0;
};

// Flat key-value configuration; every key is also a CLI flag of the same
// name. eta/epochs of -1 mean "per-model default" (0.01/5 linear,
// 0.005/10 mlp).
struct ExperimentConfig {
  std::string offline_data;
  std::string incoming_data;
  std::string output_dir = "out";
  std::string model = "perceptron";  // perceptron|logistic|svm|mlp
  double eta = -1.0;
  double l2 = 1e-4;
  int epochs = -1;
  int hidden1 = 64;
  int hidden2 = 64;
  std::size_t batch_size = 10000;
  double train_fraction = 0.9;
  std::uint64_t seed = 42;
  int eval_every_k_batches = 1;
  EarlyStopRule early_stop;
  LwfSettings lwf;
  bool clip_normalize = true;
  bool shuffle_incremental = false;
  bool split_shuffle = true;
  std::string class_weight = "auto";  // auto|equal
  bool resample_minority = false;

  double effective_eta() const;
  int effective_epochs() const;

  // Applies one "key=value" assignment; throws std::invalid_argument on an
  // unknown key or unparsable value.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  static ExperimentConfig from_file(const std::string& path);
  static const std::vector<std::string>& known_keys();
};

// Flow counts per (origin, attack_type), plus class totals.
struct DatasetStats {
  std::map<std::pair<std::string, std::string>, std::uint64_t>
      by_origin_attack;
  std::uint64_t benign = 0;
  std::uint64_t malicious = 0;

  std::uint64_t total() const { return benign + malicious; }
};

DatasetStats dataset_stats(std::span<const LabeledSample> samples);

struct CheckpointEntry {
  std::string path;  // relative to the output directory
  long batch_index = -1;
};

struct OfflinePhaseResult {
  TrainReport train;
  EvalSnapshot offline_test;   // batch -1
  EvalSnapshot incoming_test;  // batch -1
  CheckpointEntry checkpoint;
};

struct IncrementalResult {
  std::vector<EvalSnapshot> snapshots;  // per evaluated batch, both test sets
  ForgettingCurve curve;
  std::size_t batches_run = 0;
  std::size_t samples_consumed = 0;
  bool early_stopped = false;
  double wall_seconds = 0.0;        // whole phase, evaluations included
  double train_seconds = 0.0;       // pure partial_fit time
  double per_batch_train_seconds = 0.0;
  std::vector<CheckpointEntry> checkpoints;
};

struct LwfComparison {
  IncrementalResult plain;
  IncrementalResult lwf;
};

struct TimingTable {
  double offline_train_seconds = 0.0;
  double incremental_seconds = 0.0;
  double per_batch_mean_seconds = 0.0;
  std::optional<double> lwf_incremental_seconds;
  std::optional<double> lwf_per_batch_mean_seconds;
};

struct SplitSummary {
  std::size_t offline_total = 0, offline_train = 0, offline_test = 0;
  std::size_t incoming_total = 0, incoming_train = 0, incoming_test = 0;
  std::size_t batch_count = 0;
};

struct ExperimentReport {
  ExperimentConfig config;
  DatasetStats offline_stats;
  DatasetStats incoming_stats;
  SplitSummary splits;
  TrainReport offline_train;
  EvalSnapshot offline_eval_offline_test;
  EvalSnapshot offline_eval_incoming_test;
  std::optional<IncrementalResult> incremental;  // plain run
  std::optional<LwfComparison> lwf;              // mlp comparison run
  TimingTable timing;
};

struct IncrementalOptions {
  // Stop after this many batches (testing hook); <0 runs to the end.
  long stop_after_batch = -1;
  // Continue from output_dir/checkpoints/latest.json and the snapshot log.
  bool resume = false;
};

// Drives the full experiment: offline training on the offline source,
// per-batch incremental updates on the incoming source, dual evaluation at
// every kth batch, optional early stopping and optional LwF comparison.
// The scaler is fitted on the offline training split only.
class ProtocolRunner {
 public:
  static constexpr const char* kOfflineTestId = "offline_test";
  static constexpr const char* kIncomingTestId = "incoming_test";

  explicit ProtocolRunner(ExperimentConfig cfg);

  // Reads the two feature CSVs named in the config.
  void load();
  // Same pipeline with in-memory sources (synthetic runs, tests).
  void load_from_memory(std::vector<LabeledSample> offline,
                        std::vector<LabeledSample> incoming);

  OfflinePhaseResult run_offline_phase();
  IncrementalResult run_incremental_phase(const IncrementalOptions& opts = {});
  LwfComparison run_lwf_phase();

  // All phases; writes checkpoints, the snapshot log, report.json, curve
  // CSVs, tables.txt and timing.json under config.output_dir.
  ExperimentReport run_all(const IncrementalOptions& opts = {});

  const ExperimentConfig& config() const { return cfg_; }
  const MinMaxScaler& scaler() const { return scaler_; }
  const Model& model() const { return model_; }
  const SplitSummary& splits() const { return splits_; }
  const DatasetStats& offline_stats() const { return offline_stats_; }
  const DatasetStats& incoming_stats() const { return incoming_stats_; }
  std::size_t incremental_samples_consumed() const {
    return samples_consumed_;
  }
  // How many times the identity-tag leakage assertion ran.
  std::size_t leakage_checks() const { return leakage_checks_; }

 private:
  struct LoopSpec;

  void split_and_prepare(std::vector<LabeledSample> offline,
                         std::vector<LabeledSample> incoming);
  void guard_against_leakage(std::span<const std::uint64_t> ids) const;
  Model make_model() const;
  EvalSnapshot evaluate(const Model& model, const std::string& model_id,
                        const std::string& test_set_id, long batch_index);
  void reset_snapshot_log() const;
  void append_snapshot_log(const EvalSnapshot& snap) const;
  CheckpointEntry write_checkpoint(const Model& model, long batch_index,
                                   const std::string& stem,
                                   bool update_latest);
  IncrementalResult incremental_loop(const LoopSpec& spec);
  void prepare_resume(long* start_batch,
                      std::vector<EvalSnapshot>* prior) const;

  ExperimentConfig cfg_;
  bool loaded_ = false;
  bool offline_done_ = false;

  std::vector<LabeledSample> offline_train_, offline_test_;
  std::vector<LabeledSample> incoming_train_, incoming_test_;
  std::vector<std::uint64_t> incoming_train_ids_;
  std::vector<std::uint64_t> offline_train_ids_;
  std::unordered_set<std::uint64_t> test_ids_;
  mutable std::size_t leakage_checks_ = 0;

  DatasetStats offline_stats_, incoming_stats_;
  SplitSummary splits_;
  MinMaxScaler scaler_;
  ClassWeights weights_;
  Model model_;
  TrainReport offline_train_report_;
  EvalSnapshot offline_baseline_, incoming_baseline_;
  CheckpointEntry offline_checkpoint_;
  std::size_t samples_consumed_ = 0;
};

// Re-emits report.json, per-curve CSVs, tables.txt and timing.json into dir.
// Output is deterministic: identical reports produce identical bytes;
// wall-clock values live only in timing.json and tables.txt.
void emit_reports(const ExperimentReport& report, const std::string& dir);

// Reconstructs a report from an emitted report.json (+ timing.json when
// present, for tables.txt regeneration).
ExperimentReport load_report(const std::string& report_json_path,
                             const std::string& timing_json_path = "");

std::string render_tables(const ExperimentReport& report);
std::string render_stats(const DatasetStats& stats, const std::string& title);

}  // namespace flowdrift
