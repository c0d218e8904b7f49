#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flowdrift/features.hpp"

namespace flowdrift {

// Two-population Gaussian-blob generator with a shifted class boundary,
// used for desk-scale drift experiments. The offline population separates
// benign/malicious along one axis; the incoming population collapses that
// axis into overlap and separates along a different one, so a model fitted
// offline degrades on incoming data and can recover through incremental
// updates.
class DriftGenerator {
 public:
  enum class Population { kOffline, kIncoming };

  explicit DriftGenerator(std::uint64_t seed, double sigma = 0.35);

  // Balanced classes, seeded-shuffled order.
  std::vector<LabeledSample> make(Population pop, std::size_t count) const;

  // The generating distribution's own optimal classifier (nearest class
  // mean; covariances are equal and spherical).
  int bayes_label(Population pop, const FeatureVector& x) const;
  double bayes_accuracy(Population pop,
                        std::span<const LabeledSample> samples) const;

  double sigma() const { return sigma_; }

 private:
  std::vector<double> class_mean(Population pop, int label) const;

  std::uint64_t seed_;
  double sigma_;
};

}  // namespace flowdrift
