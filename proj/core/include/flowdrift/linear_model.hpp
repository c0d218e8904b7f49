#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace flowdrift {

enum class LinearKind { kPerceptron, kLogistic, kSvmHinge };

std::string linear_kind_name(LinearKind kind);
LinearKind linear_kind_from_name(const std::string& name);

double sigmoid(double z);

// One incrementally trainable linear classifier. All three kinds share the
// raw margin w.x + b; they differ only in the SGD update rule.
struct LinearModel {
  LinearKind kind = LinearKind::kPerceptron;
  std::vector<double> weights;
  double bias = 0.0;
  double eta = 0.01;
  double l2 = 0.0;  // ridge decay, SVM only
  std::uint64_t seed = 0;

  static LinearModel make(LinearKind kind, std::size_t dim, double eta = 0.01,
                          double l2 = 0.0, std::uint64_t seed = 0);

  std::size_t dim() const { return weights.size(); }
};

// Raw margin w.x + b.
double score(const LinearModel& model, std::span<const double> x);

// Logistic posterior sigma(w.x + b); valid for any kind but calibrated only
// for kLogistic.
double probability(const LinearModel& model, std::span<const double> x);

// Perceptron/SVM: 1 iff margin > 0 (ties predict benign).
// Logistic: 1 iff sigma(margin) >= 0.5.
int predict(const LinearModel& model, std::span<const double> x);

// One weighted SGD step on (x, y), y in {0, 1}:
//   perceptron: update by eta*w*y' when y'*(w.x+b) <= 0, y' = 2y-1
//   logistic:   w += eta*w*(y - sigma(w.x+b)) * x
//   svm_hinge:  w *= (1 - eta*l2), then hinge step when y'*(w.x+b) < 1
// Throws std::invalid_argument on dimension mismatch or non-finite input.
void sgd_update(LinearModel& model, std::span<const double> x, int y,
                double weight = 1.0);

// Per-sample loss under the model's objective (perceptron criterion,
// log-loss, or hinge + l2/2*|w|^2).
double sample_loss(const LinearModel& model, std::span<const double> x, int y);

}  // namespace flowdrift
