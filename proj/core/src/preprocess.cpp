#include "flowdrift/preprocess.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "flowdrift/errors.hpp"

namespace flowdrift {

MinMaxScaler MinMaxScaler::fit(std::span<const LabeledSample> train,
                               bool clip) {
  if (train.empty()) {
    throw std::invalid_argument("MinMaxScaler::fit: empty training set");
  }
  MinMaxScaler scaler;
  scaler.clip_ = clip;
  scaler.min_.assign(kFeatureCount, 0.0);
  scaler.max_.assign(kFeatureCount, 0.0);
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    double lo = train[0].features.values[j];
    double hi = lo;
    for (const LabeledSample& s : train) {
      lo = std::min(lo, s.features.values[j]);
      hi = std::max(hi, s.features.values[j]);
    }
    scaler.min_[j] = lo;
    scaler.max_[j] = hi;
  }
  scaler.fitted_ = true;
  return scaler;
}

FeatureVector MinMaxScaler::transform(const FeatureVector& x) const {
  if (!fitted_) {
    throw std::logic_error("MinMaxScaler::transform: scaler not fitted");
  }
  FeatureVector out = x;
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    double range = max_[j] - min_[j];
    double v = range == 0.0 ? 0.0 : (x.values[j] - min_[j]) / range;
    if (clip_) v = std::clamp(v, 0.0, 1.0);
    out.values[j] = v;
  }
  return out;
}

LabeledSample MinMaxScaler::transform(const LabeledSample& sample) const {
  LabeledSample out = sample;
  out.features = transform(sample.features);
  return out;
}

std::vector<LabeledSample> MinMaxScaler::transform(
    std::span<const LabeledSample> samples) const {
  std::vector<LabeledSample> out;
  out.reserve(samples.size());
  for (const LabeledSample& s : samples) out.push_back(transform(s));
  return out;
}

void MinMaxScaler::save(const std::string& path) const {
  if (!fitted_) throw std::logic_error("MinMaxScaler::save: not fitted");
  nlohmann::ordered_json j;
  j["mins"] = min_;
  j["maxs"] = max_;
  j["clip"] = clip_;
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write scaler: " + path);
  out << j.dump(2) << "\n";
}

MinMaxScaler MinMaxScaler::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open scaler: " + path);
  nlohmann::json j;
  in >> j;
  MinMaxScaler scaler;
  scaler.min_ = j.at("mins").get<std::vector<double>>();
  scaler.max_ = j.at("maxs").get<std::vector<double>>();
  scaler.clip_ = j.at("clip").get<bool>();
  if (scaler.min_.size() != kFeatureCount ||
      scaler.max_.size() != kFeatureCount) {
    throw SchemaError(path + ": wrong feature count");
  }
  scaler.fitted_ = true;
  return scaler;
}

void SplitPlan::save(const std::string& path) const {
  nlohmann::ordered_json j;
  j["train_fraction"] = train_fraction;
  j["seed"] = seed;
  j["shuffle"] = shuffle;
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write split plan: " + path);
  out << j.dump(2) << "\n";
}

SplitPlan SplitPlan::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open split plan: " + path);
  nlohmann::json j;
  in >> j;
  SplitPlan plan;
  plan.train_fraction = j.at("train_fraction").get<double>();
  plan.seed = j.at("seed").get<std::uint64_t>();
  plan.shuffle = j.at("shuffle").get<bool>();
  return plan;
}

ClassWeights ClassWeights::balanced(std::span<const LabeledSample> samples) {
  std::size_t n0 = 0, n1 = 0;
  for (const LabeledSample& s : samples) (s.label == 0 ? n0 : n1)++;
  if (n0 == 0 || n1 == 0) {
    throw std::invalid_argument(
        "class_weights: both classes must be present");
  }
  double n = static_cast<double>(samples.size());
  return ClassWeights{n / (2.0 * static_cast<double>(n0)),
                      n / (2.0 * static_cast<double>(n1))};
}

std::vector<LabeledSample> oversample_minority(
    std::vector<LabeledSample> samples, std::uint64_t seed) {
  std::vector<std::size_t> idx0, idx1;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    (samples[i].label == 0 ? idx0 : idx1).push_back(i);
  }
  if (idx0.empty() || idx1.empty() || idx0.size() == idx1.size()) {
    return samples;
  }
  const auto& minority = idx0.size() < idx1.size() ? idx0 : idx1;
  std::size_t deficit =
      std::max(idx0.size(), idx1.size()) - minority.size();
  Rng rng(seed);
  for (std::size_t k = 0; k < deficit; ++k) {
    samples.push_back(samples[minority[rng.bounded(minority.size())]]);
  }
  return samples;
}

}  // namespace flowdrift
