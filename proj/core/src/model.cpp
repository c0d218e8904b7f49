#include "flowdrift/model.hpp"

#include <chrono>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <stdexcept>

#include "flowdrift/errors.hpp"
#include "flowdrift/rng.hpp"

namespace flowdrift {

namespace {

std::span<const double> features_of(const LabeledSample& s) {
  return {s.features.values.data(), s.features.values.size()};
}

std::size_t model_dim(const Model& model) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) return m.dim();
        else return m.input_dim();
      },
      model);
}

void check_sample_dim(const Model& model) {
  if (model_dim(model) != kFeatureCount) {
    throw std::invalid_argument(
        "model input dimension does not match the feature count");
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

std::string model_kind_name(const Model& model) {
  if (const auto* linear = std::get_if<LinearModel>(&model)) {
    return linear_kind_name(linear->kind);
  }
  return "mlp";
}

double score(const Model& model, std::span<const double> x) {
  return std::visit([&](const auto& m) { return score(m, x); }, model);
}

int predict(const Model& model, std::span<const double> x) {
  return std::visit([&](const auto& m) { return predict(m, x); }, model);
}

double sample_loss(const Model& model, std::span<const double> x, int y) {
  if (const auto* linear = std::get_if<LinearModel>(&model)) {
    return sample_loss(*linear, x, y);
  }
  const auto& mlp = std::get<MlpModel>(model);
  return cross_entropy(mlp_forward(mlp, x).probabilities, y);
}

void update(Model& model, std::span<const double> x, int y, double weight) {
  if (auto* linear = std::get_if<LinearModel>(&model)) {
    sgd_update(*linear, x, y, weight);
  } else {
    mlp_backprop_update(std::get<MlpModel>(model), x, y, weight);
  }
}

TrainReport fit_offline(Model& model, std::span<const LabeledSample> train,
                        std::size_t epochs, const ClassWeights& weights) {
  if (epochs == 0) {
    throw std::invalid_argument("fit_offline: epochs must be >= 1");
  }
  if (train.empty()) {
    throw std::invalid_argument("fit_offline: empty training set");
  }
  check_sample_dim(model);

  auto t0 = std::chrono::steady_clock::now();
  std::uint64_t seed = std::visit([](const auto& m) { return m.seed; }, model);
  Rng rng(seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      const LabeledSample& s = train[idx];
      update(model, features_of(s), s.label, weights.at(s.label));
    }
  }

  TrainReport report;
  report.epochs = epochs;
  report.samples_seen = epochs * train.size();
  report.wall_seconds = seconds_since(t0);

  double loss_sum = 0.0, weight_sum = 0.0;
  for (const LabeledSample& s : train) {
    double w = weights.at(s.label);
    loss_sum += w * sample_loss(model, features_of(s), s.label);
    weight_sum += w;
  }
  report.final_loss = weight_sum > 0.0 ? loss_sum / weight_sum : 0.0;
  return report;
}

std::size_t partial_fit(Model& model, std::span<const LabeledSample> batch,
                        const ClassWeights& weights) {
  if (batch.empty()) return 0;
  check_sample_dim(model);
  for (const LabeledSample& s : batch) {
    update(model, features_of(s), s.label, weights.at(s.label));
  }
  return batch.size();
}

std::size_t partial_fit_lwf(MlpModel& student,
                            std::span<const LabeledSample> batch,
                            const ClassWeights& weights,
                            const LwfTrainer& trainer) {
  if (batch.empty()) return 0;
  if (student.input_dim() != kFeatureCount) {
    throw std::invalid_argument(
        "model input dimension does not match the feature count");
  }
  for (const LabeledSample& s : batch) {
    trainer.update(student, features_of(s), s.label, weights.at(s.label));
  }
  return batch.size();
}

void save_checkpoint(const Model& model, const Provenance& provenance,
                     const std::string& path) {
  nlohmann::ordered_json j;
  j["kind"] = model_kind_name(model);
  if (const auto* linear = std::get_if<LinearModel>(&model)) {
    j["eta"] = linear->eta;
    j["l2"] = linear->l2;
    j["seed"] = linear->seed;
    j["weights"] = linear->weights;
    j["bias"] = linear->bias;
  } else {
    const auto& mlp = std::get<MlpModel>(model);
    j["eta"] = mlp.eta;
    j["seed"] = mlp.seed;
    j["layer_sizes"] = mlp.layer_sizes;
    j["weights"] = mlp.weights;
    j["biases"] = mlp.biases;
  }
  j["provenance"] = {{"samples_seen", provenance.samples_seen},
                     {"batch_index", provenance.batch_index}};
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write checkpoint: " + path);
  out << j.dump(2) << "\n";
}

Model load_checkpoint(const std::string& path, Provenance* provenance) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }

  if (provenance && j.contains("provenance")) {
    provenance->samples_seen =
        j["provenance"].value("samples_seen", std::size_t{0});
    provenance->batch_index = j["provenance"].value("batch_index", -1L);
  }

  std::string kind = j.at("kind").get<std::string>();
  if (kind == "mlp") {
    MlpModel mlp;
    mlp.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    mlp.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    mlp.biases = j.at("biases").get<std::vector<std::vector<double>>>();
    mlp.eta = j.at("eta").get<double>();
    mlp.seed = j.at("seed").get<std::uint64_t>();
    if (mlp.weights.size() + 1 != mlp.layer_sizes.size() ||
        mlp.biases.size() != mlp.weights.size()) {
      throw SchemaError(path + ": inconsistent layer shapes");
    }
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
      if (mlp.weights[l].size() !=
              mlp.layer_sizes[l] * mlp.layer_sizes[l + 1] ||
          mlp.biases[l].size() != mlp.layer_sizes[l + 1]) {
        throw SchemaError(path + ": inconsistent layer shapes");
      }
    }
    return mlp;
  }

  LinearModel linear;
  linear.kind = linear_kind_from_name(kind);
  linear.weights = j.at("weights").get<std::vector<double>>();
  linear.bias = j.at("bias").get<double>();
  linear.eta = j.at("eta").get<double>();
  linear.l2 = j.at("l2").get<double>();
  linear.seed = j.at("seed").get<std::uint64_t>();
  return linear;
}

}  // namespace flowdrift
