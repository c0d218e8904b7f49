#include "flowdrift/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "csv_util.hpp"
#include "flowdrift/errors.hpp"

namespace flowdrift {

ConfusionCounts confusion(std::span<const int> preds,
                          std::span<const int> labels) {
  if (preds.size() != labels.size()) {
    throw std::invalid_argument("confusion: length mismatch");
  }
  if (preds.empty()) {
    throw std::invalid_argument("confusion: empty input");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] == 1) {
      (preds[i] == 1 ? c.tp : c.fn)++;
    } else {
      (preds[i] == 1 ? c.fp : c.tn)++;
    }
  }
  return c;
}

double accuracy(const ConfusionCounts& c) {
  std::uint64_t total = c.total();
  if (total == 0) return 0.0;
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
}

double recall(const ConfusionCounts& c) {
  std::uint64_t denom = c.tp + c.fn;
  if (denom == 0) return 0.0;
  return static_cast<double>(c.tp) / static_cast<double>(denom);
}

double precision(const ConfusionCounts& c) {
  std::uint64_t denom = c.tp + c.fp;
  if (denom == 0) return 0.0;
  return static_cast<double>(c.tp) / static_cast<double>(denom);
}

double f1(const ConfusionCounts& c) {
  double p = precision(c);
  double r = recall(c);
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

std::optional<double> auroc(std::span<const double> scores,
                            std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("auroc: length mismatch");
  }
  std::uint64_t n_pos = 0, n_neg = 0;
  for (int y : labels) (y == 1 ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Midranks: tied scores share the average of their 1-based rank range.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    double midrank = 0.5 * static_cast<double>(i + 1 + j);  // (i+1 + j) / 2
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) rank_sum_pos += midrank;
    }
    i = j;
  }

  double np = static_cast<double>(n_pos);
  double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double forgetting_rate(double acc_before, double acc_after_n) {
  if (acc_before <= 0.0) {
    throw std::invalid_argument(
        "forgetting_rate: baseline accuracy must be > 0");
  }
  return (acc_before - acc_after_n) / acc_before;
}

EvalSnapshot snapshot(const Model& model,
                      std::span<const LabeledSample> test_set,
                      std::string model_id, std::string test_set_id,
                      long batch_index) {
  if (test_set.empty()) {
    throw std::invalid_argument("snapshot: empty test set");
  }
  auto t0 = std::chrono::steady_clock::now();

  std::vector<int> preds(test_set.size());
  std::vector<int> labels(test_set.size());
  std::vector<double> scores(test_set.size());
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    std::span<const double> x{test_set[i].features.values.data(),
                              kFeatureCount};
    preds[i] = predict(model, x);
    scores[i] = score(model, x);
    labels[i] = test_set[i].label;
  }

  EvalSnapshot snap;
  snap.model_id = std::move(model_id);
  snap.test_set_id = std::move(test_set_id);
  snap.counts = confusion(preds, labels);
  snap.accuracy = accuracy(snap.counts);
  snap.precision = precision(snap.counts);
  snap.recall = recall(snap.counts);
  snap.f1 = f1(snap.counts);
  snap.auroc = auroc(scores, labels);
  snap.batch_index = batch_index;
  snap.wall_seconds = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
  return snap;
}

ForgettingCurve build_curve(std::span<const EvalSnapshot> snapshots,
                            const std::string& offline_test_id) {
  const EvalSnapshot* baseline = nullptr;
  for (const EvalSnapshot& s : snapshots) {
    if (s.batch_index == -1 && s.test_set_id == offline_test_id) {
      baseline = &s;
      break;
    }
  }
  if (!baseline) {
    throw std::invalid_argument(
        "build_curve: missing baseline snapshot (batch -1, test set '" +
        offline_test_id + "')");
  }

  ForgettingCurve curve;
  curve.model_id = baseline->model_id;
  curve.baseline_accuracy = baseline->accuracy;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<long> batches;
  for (const EvalSnapshot& s : snapshots) {
    if (s.model_id != curve.model_id) {
      throw std::invalid_argument("build_curve: mixed model ids");
    }
    if (s.batch_index >= 0 &&
        std::find(batches.begin(), batches.end(), s.batch_index) ==
            batches.end()) {
      batches.push_back(s.batch_index);
    }
  }
  std::sort(batches.begin(), batches.end());

  for (long b : batches) {
    const EvalSnapshot* offline = nullptr;
    const EvalSnapshot* incoming = nullptr;
    for (const EvalSnapshot& s : snapshots) {
      if (s.batch_index != b) continue;
      if (s.test_set_id == offline_test_id) offline = &s;
      else incoming = &s;
    }
    curve.batch_indices.push_back(b);
    curve.offline_accuracy.push_back(offline ? offline->accuracy : nan);
    curve.forgetting.push_back(
        offline ? forgetting_rate(curve.baseline_accuracy, offline->accuracy)
                : nan);
    curve.incoming_accuracy.push_back(incoming ? incoming->accuracy : nan);
    curve.f1.push_back(incoming ? incoming->f1 : nan);
    curve.precision.push_back(incoming ? incoming->precision : nan);
    curve.recall.push_back(incoming ? incoming->recall : nan);
    curve.auroc.push_back(
        incoming && incoming->auroc ? *incoming->auroc : nan);
  }

  curve.accuracy_ascending.resize(curve.size());
  std::iota(curve.accuracy_ascending.begin(), curve.accuracy_ascending.end(),
            std::size_t{0});
  std::stable_sort(curve.accuracy_ascending.begin(),
                   curve.accuracy_ascending.end(),
                   [&](std::size_t a, std::size_t b) {
                     double va = curve.incoming_accuracy[a];
                     double vb = curve.incoming_accuracy[b];
                     if (std::isnan(va)) return false;
                     if (std::isnan(vb)) return true;
                     return va < vb;
                   });
  return curve;
}

namespace {

std::string field_or_empty(double v) {
  return std::isnan(v) ? std::string{} : detail::format_double(v, 17);
}

double parse_optional_field(std::string_view s, const std::string& where) {
  if (detail::trim(s).empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  auto v = detail::parse_double(detail::trim(s));
  if (!v) throw SchemaError(where + ": unparsable number");
  return *v;
}

}  // namespace

void write_curve_csv(const ForgettingCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write curve csv: " + path);
  out << "batch_index,offline_acc,incoming_acc,forgetting,f1,precision,"
         "recall,auroc\n";
  // Row 0 carries the baseline as batch -1 with empty incoming columns.
  out << "-1," << detail::format_double(curve.baseline_accuracy, 17)
      << ",,,,,,\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << curve.batch_indices[i] << ','
        << field_or_empty(curve.offline_accuracy[i]) << ','
        << field_or_empty(curve.incoming_accuracy[i]) << ','
        << field_or_empty(curve.forgetting[i]) << ','
        << field_or_empty(curve.f1[i]) << ','
        << field_or_empty(curve.precision[i]) << ','
        << field_or_empty(curve.recall[i]) << ','
        << field_or_empty(curve.auroc[i]) << "\n";
  }
}

ForgettingCurve read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open curve csv: " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path + ": missing header");
  if (detail::split_csv_line(line).size() != 8) {
    throw SchemaError(path + ": expected 8 columns");
  }

  ForgettingCurve curve;
  bool have_baseline = false;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 8) {
      throw SchemaError(path + ":" + std::to_string(line_no) +
                        ": wrong field count");
    }
    std::string where = path + ":" + std::to_string(line_no);
    auto batch = detail::parse_int(detail::trim(fields[0]));
    if (!batch) throw SchemaError(where + ": bad batch index");
    if (*batch == -1) {
      curve.baseline_accuracy = parse_optional_field(fields[1], where);
      have_baseline = true;
      continue;
    }
    curve.batch_indices.push_back(static_cast<long>(*batch));
    curve.offline_accuracy.push_back(parse_optional_field(fields[1], where));
    curve.incoming_accuracy.push_back(parse_optional_field(fields[2], where));
    curve.forgetting.push_back(parse_optional_field(fields[3], where));
    curve.f1.push_back(parse_optional_field(fields[4], where));
    curve.precision.push_back(parse_optional_field(fields[5], where));
    curve.recall.push_back(parse_optional_field(fields[6], where));
    curve.auroc.push_back(parse_optional_field(fields[7], where));
  }
  if (!have_baseline) {
    throw SchemaError(path + ": missing baseline row (batch -1)");
  }

  curve.accuracy_ascending.resize(curve.size());
  std::iota(curve.accuracy_ascending.begin(), curve.accuracy_ascending.end(),
            std::size_t{0});
  std::stable_sort(curve.accuracy_ascending.begin(),
                   curve.accuracy_ascending.end(),
                   [&](std::size_t a, std::size_t b) {
                     double va = curve.incoming_accuracy[a];
                     double vb = curve.incoming_accuracy[b];
                     if (std::isnan(va)) return false;
                     if (std::isnan(vb)) return true;
                     return va < vb;
                   });
  return curve;
}

}  // namespace flowdrift
