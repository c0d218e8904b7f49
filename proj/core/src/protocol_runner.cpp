#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>

#include "flowdrift/errors.hpp"
#include "flowdrift/feature_io.hpp"
#include "flowdrift/protocol.hpp"
#include "flowdrift/rng.hpp"
#include "report_json.hpp"

namespace flowdrift {

namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string zero_padded(long n, int width) {
  std::string s = std::to_string(n);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

using TaggedSample = std::pair<LabeledSample, std::uint64_t>;

std::vector<TaggedSample> tag_samples(std::vector<LabeledSample> samples,
                                      std::uint64_t base) {
  std::vector<TaggedSample> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.emplace_back(std::move(samples[i]), base + i);
  }
  return out;
}

}  // namespace

struct ProtocolRunner::LoopSpec {
  Model* model = nullptr;
  const LwfTrainer* lwf = nullptr;
  std::string model_id;
  std::string checkpoint_stem = "batch";
  bool update_latest = true;
  long start_batch = 0;  // completed batches before this loop
  long stop_after_batch = -1;
  std::vector<EvalSnapshot> prior;  // resumed per-batch snapshots
};

ProtocolRunner::ProtocolRunner(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
}

void ProtocolRunner::load() {
  if (cfg_.offline_data.empty() || cfg_.incoming_data.empty()) {
    throw std::invalid_argument(
        "config must name both offline_data and incoming_data");
  }
  auto offline = read_feature_csv(cfg_.offline_data);
  auto incoming = read_feature_csv(cfg_.incoming_data);
  split_and_prepare(std::move(offline), std::move(incoming));
}

void ProtocolRunner::load_from_memory(std::vector<LabeledSample> offline,
                                      std::vector<LabeledSample> incoming) {
  split_and_prepare(std::move(offline), std::move(incoming));
}

void ProtocolRunner::split_and_prepare(std::vector<LabeledSample> offline,
                                       std::vector<LabeledSample> incoming) {
  offline_stats_ = dataset_stats(offline);
  incoming_stats_ = dataset_stats(incoming);
  splits_.offline_total = offline.size();
  splits_.incoming_total = incoming.size();

  auto tagged_offline = tag_samples(std::move(offline), 0);
  auto tagged_incoming =
      tag_samples(std::move(incoming), std::uint64_t{1} << 32);

  SplitPlan offline_plan{cfg_.train_fraction, cfg_.seed, cfg_.split_shuffle};
  SplitPlan incoming_plan{cfg_.train_fraction, cfg_.seed + 1,
                          cfg_.split_shuffle};
  auto [off_train, off_test] = split(std::move(tagged_offline), offline_plan);
  auto [inc_train, inc_test] =
      split(std::move(tagged_incoming), incoming_plan);

  if (cfg_.resample_minority) {
    // Oversampled duplicates keep the original sample's identity tag.
    std::vector<std::size_t> idx0, idx1;
    for (std::size_t i = 0; i < off_train.size(); ++i) {
      (off_train[i].first.label == 0 ? idx0 : idx1).push_back(i);
    }
    if (!idx0.empty() && !idx1.empty() && idx0.size() != idx1.size()) {
      const auto& minority = idx0.size() < idx1.size() ? idx0 : idx1;
      std::size_t deficit =
          std::max(idx0.size(), idx1.size()) - minority.size();
      Rng rng(cfg_.seed + 3);
      for (std::size_t k = 0; k < deficit; ++k) {
        off_train.push_back(off_train[minority[rng.bounded(minority.size())]]);
      }
    }
  }

  if (cfg_.shuffle_incremental) {
    Rng rng(cfg_.seed + 2);
    rng.shuffle(inc_train);
  }

  test_ids_.clear();
  auto unzip = [this](std::vector<TaggedSample> tagged,
                      std::vector<LabeledSample>& samples,
                      std::vector<std::uint64_t>* ids, bool is_test) {
    samples.clear();
    samples.reserve(tagged.size());
    if (ids) {
      ids->clear();
      ids->reserve(tagged.size());
    }
    for (auto& [sample, id] : tagged) {
      samples.push_back(std::move(sample));
      if (ids) ids->push_back(id);
      if (is_test) test_ids_.insert(id);
    }
  };
  unzip(std::move(off_train), offline_train_, &offline_train_ids_, false);
  unzip(std::move(off_test), offline_test_, nullptr, true);
  unzip(std::move(inc_train), incoming_train_, &incoming_train_ids_, false);
  unzip(std::move(inc_test), incoming_test_, nullptr, true);

  // Scaler learns from the offline training split only; everything else is
  // transformed through it.
  guard_against_leakage(offline_train_ids_);
  scaler_ = MinMaxScaler::fit(offline_train_, cfg_.clip_normalize);
  offline_train_ = scaler_.transform(offline_train_);
  offline_test_ = scaler_.transform(offline_test_);
  incoming_train_ = scaler_.transform(incoming_train_);
  incoming_test_ = scaler_.transform(incoming_test_);

  weights_ = cfg_.class_weight == "auto"
                 ? ClassWeights::balanced(offline_train_)
                 : ClassWeights{};

  splits_.offline_train = offline_train_.size();
  splits_.offline_test = offline_test_.size();
  splits_.incoming_train = incoming_train_.size();
  splits_.incoming_test = incoming_test_.size();
  splits_.batch_count =
      (incoming_train_.size() + cfg_.batch_size - 1) / cfg_.batch_size;
  loaded_ = true;
}

void ProtocolRunner::guard_against_leakage(
    std::span<const std::uint64_t> ids) const {
  ++leakage_checks_;
  for (std::uint64_t id : ids) {
    if (test_ids_.contains(id)) {
      throw std::logic_error(
          "leakage guard: a test-set sample reached a training call");
    }
  }
}

Model ProtocolRunner::make_model() const {
  if (cfg_.model == "mlp") {
    return MlpModel::glorot({kFeatureCount,
                             static_cast<std::size_t>(cfg_.hidden1),
                             static_cast<std::size_t>(cfg_.hidden2), 2},
                            cfg_.effective_eta(), cfg_.seed);
  }
  return LinearModel::make(linear_kind_from_name(cfg_.model), kFeatureCount,
                           cfg_.effective_eta(), cfg_.l2, cfg_.seed);
}

EvalSnapshot ProtocolRunner::evaluate(const Model& model,
                                      const std::string& model_id,
                                      const std::string& test_set_id,
                                      long batch_index) {
  const auto& test_set =
      test_set_id == kOfflineTestId ? offline_test_ : incoming_test_;
  return snapshot(model, test_set, model_id, test_set_id, batch_index);
}

void ProtocolRunner::reset_snapshot_log() const {
  fs::create_directories(cfg_.output_dir);
  std::ofstream out(fs::path(cfg_.output_dir) / "snapshots.jsonl",
                    std::ios::trunc);
}

void ProtocolRunner::append_snapshot_log(const EvalSnapshot& snap) const {
  std::ofstream out(fs::path(cfg_.output_dir) / "snapshots.jsonl",
                    std::ios::app);
  if (!out) return;
  out << detail::snapshot_to_json(snap, true).dump() << "\n";
}

CheckpointEntry ProtocolRunner::write_checkpoint(const Model& model,
                                                 long batch_index,
                                                 const std::string& stem,
                                                 bool update_latest) {
  fs::path dir = fs::path(cfg_.output_dir) / "checkpoints";
  fs::create_directories(dir);
  std::string name = batch_index < 0
                         ? stem + ".json"
                         : stem + "_" + zero_padded(batch_index, 5) + ".json";
  Provenance prov{samples_consumed_, batch_index};
  save_checkpoint(model, prov, (dir / name).string());
  if (update_latest) {
    save_checkpoint(model, prov, (dir / "latest.json").string());
  }
  return CheckpointEntry{"checkpoints/" + name, batch_index};
}

OfflinePhaseResult ProtocolRunner::run_offline_phase() {
  if (!loaded_) throw std::logic_error("run_offline_phase: data not loaded");
  reset_snapshot_log();

  model_ = make_model();
  guard_against_leakage(offline_train_ids_);
  offline_train_report_ = fit_offline(
      model_, offline_train_,
      static_cast<std::size_t>(cfg_.effective_epochs()), weights_);

  const std::string id = model_kind_name(model_);
  offline_baseline_ = evaluate(model_, id, kOfflineTestId, -1);
  incoming_baseline_ = evaluate(model_, id, kIncomingTestId, -1);
  append_snapshot_log(offline_baseline_);
  append_snapshot_log(incoming_baseline_);

  fs::path dir(cfg_.output_dir);
  scaler_.save((dir / "scaler.json").string());
  SplitPlan{cfg_.train_fraction, cfg_.seed, cfg_.split_shuffle}.save(
      (dir / "split_plan_offline.json").string());
  SplitPlan{cfg_.train_fraction, cfg_.seed + 1, cfg_.split_shuffle}.save(
      (dir / "split_plan_incoming.json").string());
  {
    nlohmann::ordered_json j;
    j["samples_seen"] = offline_train_report_.samples_seen;
    j["epochs"] = offline_train_report_.epochs;
    j["wall_seconds"] = offline_train_report_.wall_seconds;
    j["final_loss"] = offline_train_report_.final_loss;
    std::ofstream out(dir / "offline_train.json");
    out << j.dump(2) << "\n";
  }

  samples_consumed_ = 0;
  offline_checkpoint_ = write_checkpoint(model_, -1, "offline", true);
  offline_done_ = true;
  return OfflinePhaseResult{offline_train_report_, offline_baseline_,
                            incoming_baseline_, offline_checkpoint_};
}

void ProtocolRunner::prepare_resume(long* start_batch,
                                    std::vector<EvalSnapshot>* prior) const {
  (void)start_batch;  // the checkpoint provenance is authoritative
  prior->clear();
  fs::path log = fs::path(cfg_.output_dir) / "snapshots.jsonl";
  if (!fs::exists(log)) return;
  std::ifstream in(log);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EvalSnapshot snap =
        detail::snapshot_from_json(nlohmann::json::parse(line));
    if (snap.batch_index >= 0) prior->push_back(snap);
  }
}

IncrementalResult ProtocolRunner::run_incremental_phase(
    const IncrementalOptions& opts) {
  if (!loaded_) {
    throw std::logic_error("run_incremental_phase: data not loaded");
  }

  LoopSpec spec;
  spec.model_id = cfg_.model;
  spec.stop_after_batch = opts.stop_after_batch;

  if (opts.resume) {
    fs::path latest = fs::path(cfg_.output_dir) / "checkpoints/latest.json";
    if (!fs::exists(latest)) {
      throw SchemaError("resume requested but no checkpoint at " +
                        latest.string());
    }
    Provenance prov;
    model_ = load_checkpoint(latest.string(), &prov);
    if (model_kind_name(model_) != cfg_.model) {
      throw SchemaError("checkpoint model kind '" + model_kind_name(model_) +
                        "' does not match configured '" + cfg_.model + "'");
    }
    std::size_t dim = std::visit(
        [](const auto& m) -> std::size_t {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, LinearModel>) return m.dim();
          else return m.input_dim();
        },
        model_);
    if (dim != kFeatureCount) {
      throw SchemaError("checkpoint feature dimension " +
                        std::to_string(dim) + " does not match " +
                        std::to_string(kFeatureCount));
    }
    spec.start_batch = prov.batch_index < 0 ? 0 : prov.batch_index;
    prepare_resume(&spec.start_batch, &spec.prior);
    spec.start_batch = prov.batch_index < 0 ? 0 : prov.batch_index;
    // Baselines come back from the snapshot log.
    fs::path log = fs::path(cfg_.output_dir) / "snapshots.jsonl";
    std::ifstream in(log);
    std::string line;
    bool have_off = false, have_inc = false;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      EvalSnapshot snap =
          detail::snapshot_from_json(nlohmann::json::parse(line));
      if (snap.batch_index != -1) continue;
      if (snap.test_set_id == kOfflineTestId) {
        offline_baseline_ = snap;
        have_off = true;
      } else if (snap.test_set_id == kIncomingTestId) {
        incoming_baseline_ = snap;
        have_inc = true;
      }
    }
    if (!have_off || !have_inc) {
      throw SchemaError("resume: snapshot log lacks baseline snapshots");
    }
    offline_done_ = true;
  } else if (!offline_done_) {
    throw std::logic_error(
        "run_incremental_phase: offline phase has not been run");
  }

  spec.model = &model_;
  return incremental_loop(spec);
}

IncrementalResult ProtocolRunner::incremental_loop(const LoopSpec& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t batch_size = cfg_.batch_size;
  BatchStream<LabeledSample> stream(
      std::span<const LabeledSample>(incoming_train_), batch_size);
  const long total_batches = static_cast<long>(stream.batch_count());
  long last_batch = spec.stop_after_batch >= 0
                        ? std::min<long>(total_batches, spec.stop_after_batch)
                        : total_batches;

  EvalSnapshot offline_base = offline_baseline_;
  EvalSnapshot incoming_base = incoming_baseline_;
  offline_base.model_id = spec.model_id;
  incoming_base.model_id = spec.model_id;

  IncrementalResult result;
  std::vector<EvalSnapshot> all = {offline_base, incoming_base};
  for (const EvalSnapshot& s : spec.prior) {
    EvalSnapshot copy = s;
    copy.model_id = spec.model_id;
    all.push_back(copy);
    result.snapshots.push_back(copy);
  }

  // Early-stop patience state survives a resume via the reloaded snapshots.
  int violations = 0;
  if (cfg_.early_stop.enabled) {
    for (const EvalSnapshot& s : spec.prior) {
      if (s.test_set_id != kOfflineTestId) continue;
      double forg = forgetting_rate(offline_base.accuracy, s.accuracy);
      violations = forg > cfg_.early_stop.max_forgetting ? violations + 1 : 0;
    }
  }

  samples_consumed_ = std::min<std::size_t>(
      static_cast<std::size_t>(spec.start_batch) * batch_size,
      incoming_train_.size());
  double train_seconds = 0.0;
  long completed = spec.start_batch;

  for (long n = spec.start_batch + 1; n <= last_batch; ++n) {
    std::span<const LabeledSample> batch = stream.batch(n - 1);
    std::span<const std::uint64_t> ids =
        std::span<const std::uint64_t>(incoming_train_ids_)
            .subspan((n - 1) * batch_size, batch.size());
    guard_against_leakage(ids);

    const auto bt0 = std::chrono::steady_clock::now();
    if (spec.lwf) {
      partial_fit_lwf(std::get<MlpModel>(*spec.model), batch, weights_,
                      *spec.lwf);
    } else {
      partial_fit(*spec.model, batch, weights_);
    }
    train_seconds += seconds_since(bt0);
    samples_consumed_ += batch.size();
    completed = n;

    const bool eval_point =
        n % cfg_.eval_every_k_batches == 0 || n == total_batches;
    if (!eval_point) continue;

    EvalSnapshot off =
        evaluate(*spec.model, spec.model_id, kOfflineTestId, n);
    EvalSnapshot inc =
        evaluate(*spec.model, spec.model_id, kIncomingTestId, n);
    append_snapshot_log(off);
    append_snapshot_log(inc);
    all.push_back(off);
    all.push_back(inc);
    result.snapshots.push_back(off);
    result.snapshots.push_back(inc);
    result.checkpoints.push_back(write_checkpoint(
        *spec.model, n, spec.checkpoint_stem, spec.update_latest));

    if (cfg_.early_stop.enabled) {
      double forg = forgetting_rate(offline_base.accuracy, off.accuracy);
      violations = forg > cfg_.early_stop.max_forgetting ? violations + 1 : 0;
      if (violations >= cfg_.early_stop.patience) {
        result.early_stopped = true;
        break;
      }
    }
  }

  result.curve = build_curve(all, kOfflineTestId);
  result.batches_run = static_cast<std::size_t>(completed);
  result.samples_consumed = samples_consumed_;
  result.wall_seconds = seconds_since(t0);
  // Mean pure-update cost per batch processed in this loop.
  long processed = completed - spec.start_batch;
  result.train_seconds = train_seconds;
  result.per_batch_train_seconds =
      processed > 0 ? train_seconds / static_cast<double>(processed) : 0.0;
  return result;
}

LwfComparison ProtocolRunner::run_lwf_phase() {
  if (!offline_done_) {
    throw std::logic_error("run_lwf_phase: offline phase has not been run");
  }
  if (!std::holds_alternative<MlpModel>(model_)) {
    throw std::logic_error("run_lwf_phase requires an mlp model");
  }

  const MlpModel teacher = std::get<MlpModel>(model_);

  LwfComparison cmp;
  {
    Model plain = model_;
    LoopSpec spec;
    spec.model = &plain;
    spec.model_id = "mlp";
    spec.checkpoint_stem = "batch";
    spec.update_latest = false;
    cmp.plain = incremental_loop(spec);
  }
  {
    Model student = model_;
    LwfTrainer trainer(teacher, LwfConfig{cfg_.lwf.lambda,
                                          cfg_.lwf.temperature});
    LoopSpec spec;
    spec.model = &student;
    spec.lwf = &trainer;
    spec.model_id = "mlp_lwf";
    spec.checkpoint_stem = "lwf_batch";
    spec.update_latest = false;
    cmp.lwf = incremental_loop(spec);
  }
  return cmp;
}

ExperimentReport ProtocolRunner::run_all(const IncrementalOptions& opts) {
  if (!loaded_) load();

  bool resumed_offline = false;
  if (opts.resume) {
    if (cfg_.lwf.enabled) {
      throw std::invalid_argument("resume is not supported with lwf.enabled");
    }
    fs::path offline_ckpt =
        fs::path(cfg_.output_dir) / "checkpoints/offline.json";
    fs::path train_json = fs::path(cfg_.output_dir) / "offline_train.json";
    if (fs::exists(offline_ckpt) && fs::exists(train_json)) {
      nlohmann::json j;
      std::ifstream in(train_json);
      in >> j;
      offline_train_report_.samples_seen =
          j.at("samples_seen").get<std::size_t>();
      offline_train_report_.epochs = j.at("epochs").get<std::size_t>();
      offline_train_report_.wall_seconds = j.at("wall_seconds").get<double>();
      offline_train_report_.final_loss = j.at("final_loss").get<double>();
      offline_checkpoint_ = CheckpointEntry{"checkpoints/offline.json", -1};
      resumed_offline = true;
    }
  }
  if (!resumed_offline) {
    run_offline_phase();
  }

  ExperimentReport report;
  report.config = cfg_;
  report.offline_stats = offline_stats_;
  report.incoming_stats = incoming_stats_;
  report.splits = splits_;

  if (cfg_.lwf.enabled) {
    report.lwf = run_lwf_phase();
    report.timing.incremental_seconds = report.lwf->plain.wall_seconds;
    report.timing.per_batch_mean_seconds =
        report.lwf->plain.per_batch_train_seconds;
    report.timing.lwf_incremental_seconds = report.lwf->lwf.wall_seconds;
    report.timing.lwf_per_batch_mean_seconds =
        report.lwf->lwf.per_batch_train_seconds;
  } else {
    IncrementalOptions inc_opts = opts;
    inc_opts.resume = opts.resume && resumed_offline;
    report.incremental = run_incremental_phase(inc_opts);
    report.timing.incremental_seconds = report.incremental->wall_seconds;
    report.timing.per_batch_mean_seconds =
        report.incremental->per_batch_train_seconds;
  }

  report.offline_train = offline_train_report_;
  report.offline_eval_offline_test = offline_baseline_;
  report.offline_eval_incoming_test = incoming_baseline_;
  report.timing.offline_train_seconds = offline_train_report_.wall_seconds;

  emit_reports(report, cfg_.output_dir);
  return report;
}

}  // namespace flowdrift
