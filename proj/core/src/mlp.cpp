#include "flowdrift/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "flowdrift/rng.hpp"

namespace flowdrift {

namespace {

void check_sizes(const std::vector<std::size_t>& sizes) {
  if (sizes.size() < 2) {
    throw std::invalid_argument("mlp needs at least input and output layers");
  }
  for (std::size_t s : sizes) {
    if (s == 0) throw std::invalid_argument("mlp layer size must be >= 1");
  }
}

std::vector<double> stable_softmax(std::span<const double> z) {
  double m = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

// Shared SGD application: output_delta is dL/dlogits; weight scales the
// whole gradient.
void apply_backprop(MlpModel& model,
                    const std::vector<std::vector<double>>& activations,
                    std::vector<double> output_delta, double weight) {
  const std::size_t layers = model.layer_count();
  std::vector<double> delta = std::move(output_delta);
  for (std::size_t l = layers; l-- > 0;) {
    const std::vector<double>& input = activations[l];
    std::vector<double>& w = model.weights[l];
    std::vector<double>& b = model.biases[l];
    const std::size_t rows = model.layer_sizes[l + 1];
    const std::size_t cols = model.layer_sizes[l];

    std::vector<double> prev_delta;
    if (l > 0) {
      prev_delta.assign(cols, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        const double d = delta[r];
        const double* wr = &w[r * cols];
        for (std::size_t c = 0; c < cols; ++c) {
          prev_delta[c] += wr[c] * d;
        }
      }
      // ReLU derivative through the post-activation values.
      for (std::size_t c = 0; c < cols; ++c) {
        if (input[c] <= 0.0) prev_delta[c] = 0.0;
      }
    }

    const double step = model.eta * weight;
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = step * delta[r];
      double* wr = &w[r * cols];
      for (std::size_t c = 0; c < cols; ++c) {
        wr[c] -= d * input[c];
      }
      b[r] -= d;
    }
    delta = std::move(prev_delta);
  }
}

void check_label(const MlpModel& model, int y) {
  if (y < 0 || static_cast<std::size_t>(y) >= model.output_dim()) {
    throw std::invalid_argument("label out of range for output layer");
  }
}

}  // namespace

MlpModel MlpModel::glorot(std::vector<std::size_t> sizes, double eta,
                          std::uint64_t seed) {
  check_sizes(sizes);
  if (eta <= 0.0) throw std::invalid_argument("learning rate must be > 0");
  MlpModel m;
  m.layer_sizes = std::move(sizes);
  m.eta = eta;
  m.seed = seed;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    std::size_t fan_in = m.layer_sizes[l];
    std::size_t fan_out = m.layer_sizes[l + 1];
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> w(fan_in * fan_out);
    for (double& v : w) v = rng.uniform(-limit, limit);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(fan_out, 0.0);
  }
  return m;
}

MlpModel MlpModel::zeros(std::vector<std::size_t> sizes, double eta) {
  check_sizes(sizes);
  MlpModel m;
  m.layer_sizes = std::move(sizes);
  m.eta = eta;
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    m.weights.emplace_back(m.layer_sizes[l] * m.layer_sizes[l + 1], 0.0);
    m.biases.emplace_back(m.layer_sizes[l + 1], 0.0);
  }
  return m;
}

MlpForward mlp_forward(const MlpModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw std::invalid_argument("feature dimension mismatch");
  }
  MlpForward fwd;
  fwd.activations.reserve(model.layer_count() + 1);
  fwd.activations.emplace_back(x.begin(), x.end());

  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    const std::vector<double>& input = fwd.activations.back();
    const std::size_t rows = model.layer_sizes[l + 1];
    const std::size_t cols = model.layer_sizes[l];
    std::vector<double> z(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = model.biases[l][r];
      const double* wr = &model.weights[l][r * cols];
      for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * input[c];
      z[r] = acc;
    }
    for (double v : z) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("non-finite activation in mlp forward pass");
      }
    }
    if (l + 1 < model.layer_count()) {
      for (double& v : z) v = std::max(0.0, v);  // ReLU
      fwd.activations.push_back(std::move(z));
    } else {
      fwd.logits = z;
      fwd.activations.push_back(std::move(z));
    }
  }
  fwd.probabilities = stable_softmax(fwd.logits);
  return fwd;
}

double cross_entropy(std::span<const double> probabilities, int y) {
  double p = probabilities[static_cast<std::size_t>(y)];
  return -std::log(std::max(p, 1e-300));
}

double mlp_backprop_update(MlpModel& model, std::span<const double> x, int y,
                           double weight) {
  check_label(model, y);
  MlpForward fwd = mlp_forward(model, x);
  double loss = cross_entropy(fwd.probabilities, y);
  std::vector<double> delta = fwd.probabilities;
  delta[static_cast<std::size_t>(y)] -= 1.0;
  apply_backprop(model, fwd.activations, std::move(delta), weight);
  return loss;
}

double score(const MlpModel& model, std::span<const double> x) {
  return mlp_forward(model, x).probabilities[1];
}

int predict(const MlpModel& model, std::span<const double> x) {
  const auto p = mlp_forward(model, x).probabilities;
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return static_cast<int>(best);
}

std::vector<double> softened_softmax(std::span<const double> logits,
                                     double temperature) {
  if (temperature <= 0.0) {
    throw std::invalid_argument("temperature must be > 0");
  }
  std::vector<double> scaled(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    scaled[i] = logits[i] / temperature;
  }
  return stable_softmax(scaled);
}

double distillation_kl(std::span<const double> teacher_logits,
                       std::span<const double> student_logits,
                       double temperature) {
  if (teacher_logits.size() != student_logits.size()) {
    throw std::invalid_argument("logit dimension mismatch");
  }
  std::vector<double> pt = softened_softmax(teacher_logits, temperature);
  std::vector<double> ps = softened_softmax(student_logits, temperature);
  double kl = 0.0;
  for (std::size_t i = 0; i < pt.size(); ++i) {
    if (pt[i] > 0.0) kl += pt[i] * std::log(pt[i] / ps[i]);
  }
  return kl;
}

double lwf_update(MlpModel& student, std::span<const double> teacher_logits,
                  std::span<const double> x, int y, double weight,
                  const LwfConfig& cfg) {
  if (cfg.temperature <= 0.0) {
    throw std::invalid_argument("temperature must be > 0");
  }
  if (cfg.lambda < 0.0) {
    throw std::invalid_argument("distillation weight must be >= 0");
  }
  check_label(student, y);
  if (teacher_logits.size() != student.output_dim()) {
    throw std::invalid_argument("teacher logit dimension mismatch");
  }

  MlpForward fwd = mlp_forward(student, x);
  const double ce = cross_entropy(fwd.probabilities, y);
  const double kl =
      distillation_kl(teacher_logits, fwd.logits, cfg.temperature);
  const double loss =
      ce + cfg.lambda * cfg.temperature * cfg.temperature * kl;

  std::vector<double> ps_t = softened_softmax(fwd.logits, cfg.temperature);
  std::vector<double> pt_t = softened_softmax(teacher_logits, cfg.temperature);

  std::vector<double> delta = fwd.probabilities;
  delta[static_cast<std::size_t>(y)] -= 1.0;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    delta[i] += cfg.lambda * cfg.temperature * (ps_t[i] - pt_t[i]);
  }
  apply_backprop(student, fwd.activations, std::move(delta), weight);
  return loss;
}

LwfTrainer::LwfTrainer(MlpModel teacher, LwfConfig cfg)
    : teacher_(std::move(teacher)), cfg_(cfg) {
  if (cfg_.temperature <= 0.0) {
    throw std::invalid_argument("temperature must be > 0");
  }
}

double LwfTrainer::update(MlpModel& student, std::span<const double> x, int y,
                          double weight) const {
  MlpForward teacher_fwd = mlp_forward(teacher_, x);
  return lwf_update(student, teacher_fwd.logits, x, y, weight, cfg_);
}

}  // namespace flowdrift
