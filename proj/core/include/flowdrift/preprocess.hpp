#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "flowdrift/features.hpp"
#include "flowdrift/rng.hpp"

namespace flowdrift {

// Per-feature min/max learned from a training set; transform maps into
// [0, 1]. Constant features map to 0.
class MinMaxScaler {
 public:
  MinMaxScaler() = default;

  static MinMaxScaler fit(std::span<const LabeledSample> train,
                          bool clip = true);

  bool fitted() const { return fitted_; }
  bool clip() const { return clip_; }
  const std::vector<double>& mins() const { return min_; }
  const std::vector<double>& maxs() const { return max_; }

  FeatureVector transform(const FeatureVector& x) const;
  LabeledSample transform(const LabeledSample& sample) const;
  std::vector<LabeledSample> transform(
      std::span<const LabeledSample> samples) const;

  void save(const std::string& path) const;
  static MinMaxScaler load(const std::string& path);

 private:
  std::vector<double> min_;
  std::vector<double> max_;
  bool clip_ = true;
  bool fitted_ = false;
};

struct SplitPlan {
  double train_fraction = 0.9;
  std::uint64_t seed = 0;
  bool shuffle = false;

  void save(const std::string& path) const;
  static SplitPlan load(const std::string& path);
};

// Deterministic train/test split: |train| = floor(train_fraction * N).
// With shuffle, the sequence is permuted (seeded) before cutting.
template <class T>
std::pair<std::vector<T>, std::vector<T>> split(std::vector<T> samples,
                                                const SplitPlan& plan) {
  if (plan.train_fraction <= 0.0 || plan.train_fraction >= 1.0) {
    throw std::invalid_argument("split: train_fraction must be in (0, 1)");
  }
  if (samples.size() < 2) {
    throw std::invalid_argument("split: need at least 2 samples");
  }
  if (plan.shuffle) {
    Rng rng(plan.seed);
    rng.shuffle(samples);
  }
  auto n_train = static_cast<std::size_t>(
      plan.train_fraction * static_cast<double>(samples.size()));
  std::vector<T> test(std::make_move_iterator(samples.begin() + n_train),
                      std::make_move_iterator(samples.end()));
  samples.resize(n_train);
  return {std::move(samples), std::move(test)};
}

// Non-owning view of a sequence as ceil(N/B) consecutive batches; every
// batch has size B except possibly the last.
template <class T>
class BatchStream {
 public:
  BatchStream(std::span<const T> data, std::size_t batch_size)
      : data_(data), batch_size_(batch_size) {
    if (batch_size == 0) {
      throw std::invalid_argument("batches: batch size must be >= 1");
    }
  }

  std::size_t batch_count() const {
    return (data_.size() + batch_size_ - 1) / batch_size_;
  }

  std::span<const T> batch(std::size_t i) const {
    std::size_t lo = i * batch_size_;
    std::size_t hi = std::min(lo + batch_size_, data_.size());
    return data_.subspan(lo, hi - lo);
  }

  std::size_t batch_size() const { return batch_size_; }
  std::size_t sample_count() const { return data_.size(); }

 private:
  std::span<const T> data_;
  std::size_t batch_size_;
};

template <class T>
BatchStream<T> batches(std::span<const T> data, std::size_t batch_size) {
  return BatchStream<T>(data, batch_size);
}

// Per-class sample weights. Balanced mode uses w_c = N / (2 * N_c).
struct ClassWeights {
  double benign = 1.0;
  double malicious = 1.0;

  double at(int label) const { return label == 0 ? benign : malicious; }

  static ClassWeights balanced(std::span<const LabeledSample> samples);
};

// Duplicates seeded random picks of the minority class until both classes
// have equal counts. Appended copies keep the input order stable up front.
std::vector<LabeledSample> oversample_minority(
    std::vector<LabeledSample> samples, std::uint64_t seed);

}  // namespace flowdrift
