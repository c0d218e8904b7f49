#include "flowdrift/synthetic.hpp"

#include <cmath>
#include <stdexcept>

#include "flowdrift/rng.hpp"

namespace flowdrift {

namespace {

// Offline population separates the classes along axis 0; the incoming
// population pulls axis 0 into the benign-looking range for both classes
// and separates along axis 1 instead.
constexpr std::size_t kPrimaryAxis = 0;
constexpr std::size_t kDriftAxis = 1;
constexpr double kOfflineBenignMean = 1.0;
constexpr double kOfflineMaliciousMean = -1.0;
constexpr double kIncomingSharedPrimary = 0.3;
constexpr double kIncomingBenignMean = 1.0;
constexpr double kIncomingMaliciousMean = -1.0;

// Uninformative per-axis offsets so the scaler sees varied ranges.
double base_offset(std::size_t axis) {
  return 0.1 * static_cast<double>(axis % 7);
}

}  // namespace

DriftGenerator::DriftGenerator(std::uint64_t seed, double sigma)
    : seed_(seed), sigma_(sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("sigma must be > 0");
}

std::vector<double> DriftGenerator::class_mean(Population pop,
                                               int label) const {
  std::vector<double> mean(kFeatureCount);
  for (std::size_t j = 0; j < kFeatureCount; ++j) mean[j] = base_offset(j);
  if (pop == Population::kOffline) {
    mean[kPrimaryAxis] +=
        label == 0 ? kOfflineBenignMean : kOfflineMaliciousMean;
  } else {
    mean[kPrimaryAxis] += kIncomingSharedPrimary;
    mean[kDriftAxis] +=
        label == 0 ? kIncomingBenignMean : kIncomingMaliciousMean;
  }
  return mean;
}

std::vector<LabeledSample> DriftGenerator::make(Population pop,
                                                std::size_t count) const {
  const std::uint64_t stream =
      seed_ ^ (pop == Population::kOffline ? 0x0ff11e5eedULL : 0x1c03175eedULL);
  Rng rng(stream);

  std::vector<double> mean0 = class_mean(pop, 0);
  std::vector<double> mean1 = class_mean(pop, 1);

  std::vector<LabeledSample> samples;
  samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    LabeledSample s;
    s.label = static_cast<int>(i % 2);
    const auto& mean = s.label == 0 ? mean0 : mean1;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      s.features.values[j] = mean[j] + sigma_ * rng.gaussian();
    }
    s.features.present.set();
    s.attack_type = s.label == 0 ? "Benign" : "Anomaly";
    s.origin = pop == Population::kOffline ? "offline" : "incoming";
    samples.push_back(std::move(s));
  }
  rng.shuffle(samples);
  return samples;
}

int DriftGenerator::bayes_label(Population pop, const FeatureVector& x) const {
  std::vector<double> mean0 = class_mean(pop, 0);
  std::vector<double> mean1 = class_mean(pop, 1);
  double d0 = 0.0, d1 = 0.0;
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    d0 += (x.values[j] - mean0[j]) * (x.values[j] - mean0[j]);
    d1 += (x.values[j] - mean1[j]) * (x.values[j] - mean1[j]);
  }
  return d1 < d0 ? 1 : 0;
}

double DriftGenerator::bayes_accuracy(
    Population pop, std::span<const LabeledSample> samples) const {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const LabeledSample& s : samples) {
    if (bayes_label(pop, s.features) == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

}  // namespace flowdrift
