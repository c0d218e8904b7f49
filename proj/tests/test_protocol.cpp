#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "flowdrift/feature_io.hpp"
#include "flowdrift/protocol.hpp"
#include "flowdrift/synthetic.hpp"
#include "helpers.hpp"

using namespace flowdrift;
using namespace testutil;

namespace {

ExperimentConfig desk_config(const TempDir& dir, const std::string& model,
                             std::size_t batch_size = 200) {
  ExperimentConfig cfg;
  cfg.model = model;
  cfg.batch_size = batch_size;
  cfg.seed = 42;
  cfg.output_dir = dir.file("out");
  return cfg;
}

ProtocolRunner make_runner(const ExperimentConfig& cfg, std::size_t n_offline,
                           std::size_t n_incoming, std::uint64_t data_seed) {
  DriftGenerator gen(data_seed);
  ProtocolRunner runner(cfg);
  runner.load_from_memory(
      gen.make(DriftGenerator::Population::kOffline, n_offline),
      gen.make(DriftGenerator::Population::kIncoming, n_incoming));
  return runner;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_SUITE_BEGIN("config");

TEST_CASE("config file parsing and key overrides") {
  TempDir dir;
  {
    std::ofstream out(dir.file("run.cfg"));
    out << "# experiment\n";
    out << "model=svm\n";
    out << "batch_size=500\n";
    out << "lwf.lambda=2.5\n";
    out << "early_stop.enabled=true\n";
    out << "shuffle_incremental=true\n";
  }
  ExperimentConfig cfg = ExperimentConfig::from_file(dir.file("run.cfg"));
  CHECK(cfg.model == "svm");
  CHECK(cfg.batch_size == 500);
  CHECK(cfg.lwf.lambda == 2.5);
  CHECK(cfg.early_stop.enabled);
  CHECK(cfg.shuffle_incremental);
  CHECK(cfg.batch_size == 500);

  cfg.set("batch_size", "10000");
  CHECK(cfg.batch_size == 10000);
  CHECK_THROWS_AS(cfg.set("no_such_key", "1"), std::invalid_argument);
  CHECK_THROWS_AS(cfg.set("batch_size", "many"), std::invalid_argument);
}

TEST_CASE("per-model defaults for eta and epochs") {
  ExperimentConfig cfg;
  CHECK(cfg.effective_eta() == 0.01);
  CHECK(cfg.effective_epochs() == 5);
  cfg.model = "mlp";
  CHECK(cfg.effective_eta() == 0.005);
  CHECK(cfg.effective_epochs() == 10);
  cfg.eta = 0.5;
  cfg.epochs = 3;
  CHECK(cfg.effective_eta() == 0.5);
  CHECK(cfg.effective_epochs() == 3);
}

TEST_CASE("invalid configurations are rejected") {
  ExperimentConfig cfg;
  cfg.model = "tree";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.model = "perceptron";
  cfg.train_fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.train_fraction = 0.9;
  cfg.lwf.enabled = true;  // requires mlp
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.lwf.enabled = false;
  cfg.offline_data = "same.csv";
  cfg.incoming_data = "same.csv";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.incoming_data = "other.csv";
  cfg.validate();
}

TEST_CASE("dataset stats count per origin and attack type") {
  std::vector<LabeledSample> samples;
  for (int i = 0; i < 7; ++i) {
    LabeledSample s = make_sample(1);
    s.attack_type = "UDPFlood";
    s.origin = "BS1";
    samples.push_back(s);
  }
  for (int i = 0; i < 3; ++i) {
    LabeledSample s = make_sample(0);
    s.origin = "BS1";
    samples.push_back(s);
  }
  DatasetStats stats = dataset_stats(samples);
  CHECK(stats.by_origin_attack.at({"BS1", "UDPFlood"}) == 7);
  CHECK(stats.by_origin_attack.at({"BS1", "Benign"}) == 3);
  CHECK(stats.malicious == 7);
  CHECK(stats.benign == 3);

  DatasetStats empty = dataset_stats({});
  CHECK(empty.total() == 0);
  CHECK(empty.by_origin_attack.empty());
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("protocol");

TEST_CASE("offline phase learns the offline population and degrades on drift") {
  TempDir dir;
  ProtocolRunner runner =
      make_runner(desk_config(dir, "perceptron"), 2000, 2000, 1);
  OfflinePhaseResult offline = runner.run_offline_phase();

  CHECK(offline.offline_test.accuracy >= 0.95);
  CHECK(offline.incoming_test.accuracy <= 0.75);
  CHECK(offline.checkpoint.batch_index == -1);
  CHECK(std::filesystem::exists(
      std::filesystem::path(runner.config().output_dir) /
      offline.checkpoint.path));
}

TEST_CASE("incremental phase recovers on incoming data and forgets some") {
  TempDir dir;
  ProtocolRunner runner =
      make_runner(desk_config(dir, "logistic"), 2000, 2000, 2);
  OfflinePhaseResult offline = runner.run_offline_phase();
  IncrementalResult inc = runner.run_incremental_phase();

  REQUIRE_FALSE(inc.curve.forgetting.empty());
  double final_incoming = inc.curve.incoming_accuracy.back();
  CHECK(final_incoming >= offline.incoming_test.accuracy + 0.15);
  CHECK(inc.curve.forgetting.back() > 0.0);
  CHECK(inc.batches_run == runner.splits().batch_count);
  // Sample accounting: every incremental-train sample touched exactly once.
  CHECK(inc.samples_consumed == runner.splits().incoming_train);
  CHECK(runner.leakage_checks() > 0);
}

TEST_CASE("runs are deterministic given config and seed") {
  auto run_once = [](const std::string& out_dir) {
    ExperimentConfig cfg;
    cfg.model = "svm";
    cfg.batch_size = 250;
    cfg.seed = 777;
    cfg.output_dir = out_dir;
    DriftGenerator gen(50);
    ProtocolRunner runner(cfg);
    runner.load_from_memory(
        gen.make(DriftGenerator::Population::kOffline, 1500),
        gen.make(DriftGenerator::Population::kIncoming, 1500));
    runner.run_offline_phase();
    return runner.run_incremental_phase();
  };

  TempDir a, b;
  IncrementalResult ra = run_once(a.file("out"));
  IncrementalResult rb = run_once(b.file("out"));
  REQUIRE(ra.snapshots.size() == rb.snapshots.size());
  for (std::size_t i = 0; i < ra.snapshots.size(); ++i) {
    CHECK(ra.snapshots[i].accuracy == rb.snapshots[i].accuracy);
    CHECK(ra.snapshots[i].counts.tp == rb.snapshots[i].counts.tp);
    CHECK(ra.snapshots[i].f1 == rb.snapshots[i].f1);
  }
}

TEST_CASE("early stop with zero tolerance halts at the first drop") {
  TempDir dir;
  ExperimentConfig cfg = desk_config(dir, "perceptron", 100);
  cfg.early_stop.enabled = true;
  cfg.early_stop.max_forgetting = 0.0;
  cfg.early_stop.patience = 1;

  ProtocolRunner runner = make_runner(cfg, 2000, 2000, 3);
  runner.run_offline_phase();
  IncrementalResult inc = runner.run_incremental_phase();
  // Drift guarantees the offline accuracy drops at the first evaluation.
  CHECK(inc.early_stopped);
  CHECK(inc.curve.size() == 1);
  CHECK(inc.curve.forgetting[0] > 0.0);
}

TEST_CASE("resuming from a checkpoint reproduces the uninterrupted run") {
  auto make_cfg = [](const std::string& out_dir) {
    ExperimentConfig cfg;
    cfg.model = "logistic";
    cfg.batch_size = 150;
    cfg.seed = 4242;
    cfg.output_dir = out_dir;
    return cfg;
  };

  TempDir full_dir, resumed_dir;
  Model uninterrupted = [&] {
    ProtocolRunner runner = make_runner(make_cfg(full_dir.file("out")),
                                        1200, 1200, 9);
    runner.run_offline_phase();
    runner.run_incremental_phase();
    return runner.model();
  }();

  Model resumed = [&] {
    // First process: killed after batch 3.
    {
      ProtocolRunner runner = make_runner(make_cfg(resumed_dir.file("out")),
                                          1200, 1200, 9);
      runner.run_offline_phase();
      IncrementalOptions opts;
      opts.stop_after_batch = 3;
      runner.run_incremental_phase(opts);
    }
    // Second process: picks up from the latest checkpoint.
    ProtocolRunner runner = make_runner(make_cfg(resumed_dir.file("out")),
                                        1200, 1200, 9);
    IncrementalOptions opts;
    opts.resume = true;
    runner.run_incremental_phase(opts);
    return runner.model();
  }();

  const auto& a = std::get<LinearModel>(uninterrupted);
  const auto& b = std::get<LinearModel>(resumed);
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);
}

TEST_CASE("lwf comparison trades incoming accuracy for retention") {
  TempDir dir;
  ExperimentConfig cfg = desk_config(dir, "mlp", 200);
  cfg.epochs = 4;
  cfg.hidden1 = 16;
  cfg.hidden2 = 16;
  cfg.lwf.enabled = true;
  cfg.lwf.lambda = 1.0;

  ProtocolRunner runner = make_runner(cfg, 2000, 2000, 21);
  runner.run_offline_phase();
  LwfComparison cmp = runner.run_lwf_phase();

  REQUIRE_FALSE(cmp.plain.curve.forgetting.empty());
  REQUIRE_FALSE(cmp.lwf.curve.forgetting.empty());
  CHECK(cmp.lwf.curve.forgetting.back() < cmp.plain.curve.forgetting.back());
  CHECK(cmp.lwf.curve.incoming_accuracy.back() <=
        cmp.plain.curve.incoming_accuracy.back());
  CHECK(cmp.plain.curve.model_id == "mlp");
  CHECK(cmp.lwf.curve.model_id == "mlp_lwf");
}

TEST_CASE("raising the distillation weight never increases final forgetting") {
  double lambdas[] = {0.0, 1.0, 4.0};
  std::vector<double> forgetting;
  for (double lambda : lambdas) {
    TempDir dir;
    ExperimentConfig cfg = desk_config(dir, "mlp", 200);
    cfg.epochs = 4;
    cfg.hidden1 = 16;
    cfg.hidden2 = 16;
    cfg.lwf.enabled = true;
    cfg.lwf.lambda = lambda;
    ProtocolRunner runner = make_runner(cfg, 1500, 1500, 33);
    runner.run_offline_phase();
    LwfComparison cmp = runner.run_lwf_phase();
    forgetting.push_back(cmp.lwf.curve.forgetting.back());
  }
  CHECK(forgetting[1] <= forgetting[0] + 1e-9);
  CHECK(forgetting[2] <= forgetting[1] + 1e-9);
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("reports");

TEST_CASE("run_all emits a complete, reloadable report") {
  TempDir dir;
  ExperimentConfig cfg = desk_config(dir, "perceptron", 250);
  ProtocolRunner runner = make_runner(cfg, 1500, 1500, 13);
  ExperimentReport report = runner.run_all();

  namespace fs = std::filesystem;
  fs::path out(cfg.output_dir);
  CHECK(fs::exists(out / "report.json"));
  CHECK(fs::exists(out / "timing.json"));
  CHECK(fs::exists(out / "tables.txt"));
  CHECK(fs::exists(out / "curve_perceptron.csv"));
  CHECK(fs::exists(out / "scaler.json"));
  CHECK(fs::exists(out / "checkpoints/offline.json"));
  REQUIRE(report.incremental.has_value());
  for (const CheckpointEntry& e : report.incremental->checkpoints) {
    CHECK(fs::exists(out / e.path));
  }

  // Emitted curve equals the in-memory curve after reload.
  ForgettingCurve back =
      read_curve_csv((out / "curve_perceptron.csv").string());
  CHECK(back.baseline_accuracy == report.incremental->curve.baseline_accuracy);
  CHECK(back.offline_accuracy == report.incremental->curve.offline_accuracy);
  CHECK(back.forgetting == report.incremental->curve.forgetting);

  // Re-emitting the same report is byte-identical.
  std::string first = read_file((out / "report.json").string());
  std::string tables_first = read_file((out / "tables.txt").string());
  emit_reports(report, cfg.output_dir);
  CHECK(read_file((out / "report.json").string()) == first);
  CHECK(read_file((out / "tables.txt").string()) == tables_first);

  // load_report round-trips everything emit_reports writes.
  ExperimentReport loaded = load_report((out / "report.json").string(),
                                        (out / "timing.json").string());
  TempDir dir2;
  emit_reports(loaded, dir2.file("re"));
  CHECK(read_file(dir2.file("re/report.json")) == first);
  CHECK(read_file(dir2.file("re/tables.txt")) == tables_first);
}

TEST_CASE("tables.txt numbers match the json values after rounding") {
  TempDir dir;
  ExperimentConfig cfg = desk_config(dir, "svm", 300);
  ProtocolRunner runner = make_runner(cfg, 1200, 1200, 17);
  ExperimentReport report = runner.run_all();

  std::string tables = read_file(
      (std::filesystem::path(cfg.output_dir) / "tables.txt").string());

  auto expect_pct = [&](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v * 100.0);
    CHECK(tables.find(buf) != std::string::npos);
  };
  expect_pct(report.offline_eval_offline_test.accuracy);
  expect_pct(report.offline_eval_incoming_test.accuracy);
  REQUIRE(report.incremental.has_value());
  expect_pct(report.incremental->curve.forgetting.back());
  expect_pct(report.incremental->curve.incoming_accuracy.back());
}

TEST_CASE("snapshot log lines carry both test sets per evaluated batch") {
  TempDir dir;
  ExperimentConfig cfg = desk_config(dir, "perceptron", 400);
  cfg.eval_every_k_batches = 2;
  ProtocolRunner runner = make_runner(cfg, 1000, 1000, 19);
  runner.run_offline_phase();
  IncrementalResult inc = runner.run_incremental_phase();

  std::ifstream in(std::filesystem::path(cfg.output_dir) / "snapshots.jsonl");
  std::size_t lines = 0;
  std::string line;
  while (std::getline(in, line)) lines += !line.empty();
  // 2 baselines + 2 per evaluated batch.
  CHECK(lines == 2 + 2 * inc.curve.size());

  // Every evaluated batch index is a multiple of k or the final batch.
  for (long b : inc.curve.batch_indices) {
    bool at_k = b % cfg.eval_every_k_batches == 0;
    bool final_batch =
        b == static_cast<long>(runner.splits().batch_count);
    CHECK((at_k || final_batch));
  }
}

TEST_SUITE_END();
