#pragma once

#include <span>
#include <string>
#include <variant>

#include "flowdrift/features.hpp"
#include "flowdrift/linear_model.hpp"
#include "flowdrift/mlp.hpp"
#include "flowdrift/preprocess.hpp"

namespace flowdrift {

using Model = std::variant<LinearModel, MlpModel>;

// "perceptron", "logistic", "svm" or "mlp".
std::string model_kind_name(const Model& model);

double score(const Model& model, std::span<const double> x);
int predict(const Model& model, std::span<const double> x);
double sample_loss(const Model& model, std::span<const double> x, int y);

// One weighted SGD step regardless of family.
void update(Model& model, std::span<const double> x, int y, double weight);

struct TrainReport {
  std::size_t samples_seen = 0;
  std::size_t epochs = 0;
  double wall_seconds = 0.0;
  double final_loss = 0.0;
};

// Full passes over the training set in seeded-shuffled order (seed taken
// from the model). final_loss is the weighted mean per-sample loss after
// training. Throws std::invalid_argument on zero epochs or an empty set.
TrainReport fit_offline(Model& model, std::span<const LabeledSample> train,
                        std::size_t epochs, const ClassWeights& weights);

// Exactly one in-order pass over the batch, starting from the current
// parameters. Returns the number of samples consumed (0 for an empty batch,
// which is a no-op).
std::size_t partial_fit(Model& model, std::span<const LabeledSample> batch,
                        const ClassWeights& weights);

// Same contract as partial_fit, with LwF distillation against the trainer's
// frozen teacher (MLP only).
std::size_t partial_fit_lwf(MlpModel& student,
                            std::span<const LabeledSample> batch,
                            const ClassWeights& weights,
                            const LwfTrainer& trainer);

// Where a checkpoint came from: how many training samples the model has
// consumed and the last completed incremental batch (-1 = offline only).
struct Provenance {
  std::size_t samples_seen = 0;
  long batch_index = -1;
};

// Checkpoints are JSON documents that round-trip parameters exactly.
void save_checkpoint(const Model& model, const Provenance& provenance,
                     const std::string& path);
Model load_checkpoint(const std::string& path,
                      Provenance* provenance = nullptr);

}  // namespace flowdrift
