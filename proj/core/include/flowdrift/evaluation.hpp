#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowdrift/features.hpp"
#include "flowdrift/model.hpp"

namespace flowdrift {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
};

// Throws std::invalid_argument on length mismatch or empty input.
ConfusionCounts confusion(std::span<const int> preds,
                          std::span<const int> labels);

// Zero-denominator convention: precision/recall/F1 are 0 when undefined.
double accuracy(const ConfusionCounts& c);
double recall(const ConfusionCounts& c);
double precision(const ConfusionCounts& c);
double f1(const ConfusionCounts& c);

// Mann-Whitney AUROC with midranks for ties:
//   (R+ - n+(n+1)/2) / (n+ * n-),  R+ = sum of positive-class midranks.
// nullopt when only one class is present (never silently 0).
std::optional<double> auroc(std::span<const double> scores,
                            std::span<const int> labels);

// (acc_before - acc_after) / acc_before. Negative when the model improved
// on the old data. Throws std::invalid_argument when acc_before <= 0.
double forgetting_rate(double acc_before, double acc_after_n);

struct EvalSnapshot {
  std::string model_id;
  std::string test_set_id;
  ConfusionCounts counts;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> auroc;
  long batch_index = -1;  // -1 = pre-incremental
  double wall_seconds = 0.0;
};

EvalSnapshot snapshot(const Model& model,
                      std::span<const LabeledSample> test_set,
                      std::string model_id, std::string test_set_id,
                      long batch_index);

// Per-batch view of one incremental run. Metric columns beyond the offline
// accuracy are taken from the incoming-test snapshots; NaN marks a value
// that was not measured (or an AUROC that was not computable).
struct ForgettingCurve {
  std::string model_id;
  double baseline_accuracy = 0.0;  // offline test set, before IL

  std::vector<long> batch_indices;
  std::vector<double> offline_accuracy;
  std::vector<double> incoming_accuracy;
  std::vector<double> forgetting;
  std::vector<double> f1;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> auroc;

  // Row order sorted by ascending incoming accuracy (NaN rows last); this is
  // the reordering used for the forgetting-vs-accuracy view.
  std::vector<std::size_t> accuracy_ascending;

  std::size_t size() const { return batch_indices.size(); }
};

// Builds the curve from snapshots of one model. Snapshots on
// offline_test_id provide the baseline (batch -1, required) and the
// per-batch offline accuracies; snapshots on any other test-set id provide
// the incoming-side columns. Throws std::invalid_argument if the baseline
// snapshot is missing or model ids differ.
ForgettingCurve build_curve(std::span<const EvalSnapshot> snapshots,
                            const std::string& offline_test_id);

// CSV columns:
//   batch_index,offline_acc,incoming_acc,forgetting,f1,precision,recall,auroc
// NaN serializes as an empty field.
void write_curve_csv(const ForgettingCurve& curve, const std::string& path);
ForgettingCurve read_curve_csv(const std::string& path);

}  // namespace flowdrift
