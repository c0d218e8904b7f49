#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace flowdrift {

// Feed-forward net with ReLU hidden layers and a 2-way softmax head,
// trained by per-sample cross-entropy SGD.
struct MlpModel {
  std::vector<std::size_t> layer_sizes;  // [in, h1, ..., out]
  // weights[l] is row-major (layer_sizes[l+1] x layer_sizes[l]).
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  double eta = 0.005;
  std::uint64_t seed = 0;

  // Glorot-uniform init: U(-sqrt(6/(fan_in+fan_out)), +sqrt(...)).
  static MlpModel glorot(std::vector<std::size_t> sizes, double eta = 0.005,
                         std::uint64_t seed = 0);
  static MlpModel zeros(std::vector<std::size_t> sizes, double eta = 0.005);

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }
  std::size_t layer_count() const { return layer_sizes.size() - 1; }
};

struct MlpForward {
  std::vector<double> logits;
  std::vector<double> probabilities;
  // Post-activation values per layer, input first; kept for backprop.
  std::vector<std::vector<double>> activations;
};

// Throws std::runtime_error if any activation is non-finite.
MlpForward mlp_forward(const MlpModel& model, std::span<const double> x);

// One weighted cross-entropy SGD step on all layers. Returns the sample's
// cross-entropy before the step.
double mlp_backprop_update(MlpModel& model, std::span<const double> x, int y,
                           double weight = 1.0);

// Softmax probability of class 1.
double score(const MlpModel& model, std::span<const double> x);
// Argmax; exact tie predicts class 0.
int predict(const MlpModel& model, std::span<const double> x);

double cross_entropy(std::span<const double> probabilities, int y);

struct LwfConfig {
  double lambda = 1.0;      // distillation weight
  double temperature = 2.0;  // softmax softening
};

// Temperature-softened softmax of raw logits.
std::vector<double> softened_softmax(std::span<const double> logits,
                                     double temperature);

// KL(softmax(teacher/T) || softmax(student/T)), in nats.
double distillation_kl(std::span<const double> teacher_logits,
                       std::span<const double> student_logits,
                       double temperature);

// One SGD step on  L = CE(y, softmax(z_s))
//                    + lambda * T^2 * KL(p_t(T) || p_s(T)).
// teacher_logits must come from the frozen pre-incremental model. Returns L
// evaluated before the step. Throws std::invalid_argument if temperature<=0.
double lwf_update(MlpModel& student, std::span<const double> teacher_logits,
                  std::span<const double> x, int y, double weight,
                  const LwfConfig& cfg);

// Frozen teacher plus settings; the teacher copy is never mutated.
class LwfTrainer {
 public:
  LwfTrainer(MlpModel teacher, LwfConfig cfg);

  double update(MlpModel& student, std::span<const double> x, int y,
                double weight = 1.0) const;

  const MlpModel& teacher() const { return teacher_; }
  const LwfConfig& config() const { return cfg_; }

 private:
  MlpModel teacher_;
  LwfConfig cfg_;
};

}  // namespace flowdrift
