#include "flowdrift/linear_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flowdrift {

std::string linear_kind_name(LinearKind kind) {
  switch (kind) {
    case LinearKind::kPerceptron: return "perceptron";
    case LinearKind::kLogistic: return "logistic";
    case LinearKind::kSvmHinge: return "svm";
  }
  return "?";
}

LinearKind linear_kind_from_name(const std::string& name) {
  if (name == "perceptron") return LinearKind::kPerceptron;
  if (name == "logistic") return LinearKind::kLogistic;
  if (name == "svm" || name == "svm_hinge") return LinearKind::kSvmHinge;
  throw std::invalid_argument("unknown linear model kind: " + name);
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

LinearModel LinearModel::make(LinearKind kind, std::size_t dim, double eta,
                              double l2, std::uint64_t seed) {
  if (eta <= 0.0) throw std::invalid_argument("learning rate must be > 0");
  if (l2 < 0.0) throw std::invalid_argument("l2 must be >= 0");
  LinearModel m;
  m.kind = kind;
  m.weights.assign(dim, 0.0);
  m.eta = eta;
  m.l2 = kind == LinearKind::kSvmHinge ? l2 : 0.0;
  m.seed = seed;
  return m;
}

namespace {

void check_input(const LinearModel& model, std::span<const double> x) {
  if (x.size() != model.weights.size()) {
    throw std::invalid_argument("feature dimension mismatch");
  }
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("non-finite feature value");
    }
  }
}

double margin(const LinearModel& model, std::span<const double> x) {
  double z = model.bias;
  for (std::size_t i = 0; i < x.size(); ++i) z += model.weights[i] * x[i];
  return z;
}

}  // namespace

double score(const LinearModel& model, std::span<const double> x) {
  check_input(model, x);
  return margin(model, x);
}

double probability(const LinearModel& model, std::span<const double> x) {
  return sigmoid(score(model, x));
}

int predict(const LinearModel& model, std::span<const double> x) {
  double z = score(model, x);
  if (model.kind == LinearKind::kLogistic) {
    return sigmoid(z) >= 0.5 ? 1 : 0;
  }
  return z > 0.0 ? 1 : 0;
}

void sgd_update(LinearModel& model, std::span<const double> x, int y,
                double weight) {
  check_input(model, x);
  if (y != 0 && y != 1) throw std::invalid_argument("label must be 0 or 1");
  if (!std::isfinite(weight) || weight < 0.0) {
    throw std::invalid_argument("sample weight must be finite and >= 0");
  }
  const double step = model.eta * weight;
  const double ypm = y == 1 ? 1.0 : -1.0;

  switch (model.kind) {
    case LinearKind::kPerceptron: {
      if (ypm * margin(model, x) <= 0.0) {
        for (std::size_t i = 0; i < x.size(); ++i) {
          model.weights[i] += step * ypm * x[i];
        }
        model.bias += step * ypm;
      }
      break;
    }
    case LinearKind::kLogistic: {
      double g = static_cast<double>(y) - sigmoid(margin(model, x));
      for (std::size_t i = 0; i < x.size(); ++i) {
        model.weights[i] += step * g * x[i];
      }
      model.bias += step * g;
      break;
    }
    case LinearKind::kSvmHinge: {
      const double decay = 1.0 - model.eta * model.l2;
      for (double& w : model.weights) w *= decay;
      if (ypm * margin(model, x) < 1.0) {
        for (std::size_t i = 0; i < x.size(); ++i) {
          model.weights[i] += step * ypm * x[i];
        }
        model.bias += step * ypm;
      }
      break;
    }
  }
}

double sample_loss(const LinearModel& model, std::span<const double> x,
                   int y) {
  check_input(model, x);
  const double z = margin(model, x);
  const double ypm = y == 1 ? 1.0 : -1.0;
  switch (model.kind) {
    case LinearKind::kPerceptron:
      return std::max(0.0, -ypm * z);
    case LinearKind::kLogistic: {
      double p = sigmoid(z);
      p = std::min(std::max(p, 1e-12), 1.0 - 1e-12);
      return y == 1 ? -std::log(p) : -std::log(1.0 - p);
    }
    case LinearKind::kSvmHinge: {
      double reg = 0.0;
      for (double w : model.weights) reg += w * w;
      return std::max(0.0, 1.0 - ypm * z) + 0.5 * model.l2 * reg;
    }
  }
  return 0.0;
}

}  // namespace flowdrift
