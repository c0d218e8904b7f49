#include <fstream>
#include <stdexcept>

#include "csv_util.hpp"
#include "flowdrift/errors.hpp"
#include "flowdrift/protocol.hpp"

namespace flowdrift {

namespace {

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::invalid_argument("config key '" + key + "': expected a boolean, got '" + value + "'");
}

double parse_num(const std::string& key, const std::string& value) {
  auto v = detail::parse_double(value);
  if (!v) {
    throw std::invalid_argument("config key '" + key + "': expected a number, got '" + value + "'");
  }
  return *v;
}

long parse_integer(const std::string& key, const std::string& value) {
  auto v = detail::parse_int(value);
  if (!v) {
    throw std::invalid_argument("config key '" + key + "': expected an integer, got '" + value + "'");
  }
  return static_cast<long>(*v);
}

}  // namespace

double ExperimentConfig::effective_eta() const {
  if (eta > 0.0) return eta;
  return model == "mlp" ? 0.005 : 0.01;
}

int ExperimentConfig::effective_epochs() const {
  if (epochs > 0) return epochs;
  return model == "mlp" ? 10 : 5;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "offline_data") offline_data = value;
  else if (key == "incoming_data") incoming_data = value;
  else if (key == "output_dir") output_dir = value;
  else if (key == "model") model = value;
  else if (key == "eta") eta = parse_num(key, value);
  else if (key == "l2") l2 = parse_num(key, value);
  else if (key == "epochs") epochs = static_cast<int>(parse_integer(key, value));
  else if (key == "hidden1") hidden1 = static_cast<int>(parse_integer(key, value));
  else if (key == "hidden2") hidden2 = static_cast<int>(parse_integer(key, value));
  else if (key == "batch_size") {
    long v = parse_integer(key, value);
    if (v < 0) throw std::invalid_argument("batch_size must be >= 1");
    batch_size = static_cast<std::size_t>(v);
  }
  else if (key == "train_fraction") train_fraction = parse_num(key, value);
  else if (key == "seed") seed = static_cast<std::uint64_t>(parse_integer(key, value));
  else if (key == "eval_every_k_batches") eval_every_k_batches = static_cast<int>(parse_integer(key, value));
  else if (key == "early_stop.enabled") early_stop.enabled = parse_bool(key, value);
  else if (key == "early_stop.max_forgetting") early_stop.max_forgetting = parse_num(key, value);
  else if (key == "early_stop.patience") early_stop.patience = static_cast<int>(parse_integer(key, value));
  else if (key == "lwf.enabled") lwf.enabled = parse_bool(key, value);
  else if (key == "lwf.lambda") lwf.lambda = parse_num(key, value);
  else if (key == "lwf.temperature") lwf.temperature = parse_num(key, value);
  else if (key == "clip_normalize") clip_normalize = parse_bool(key, value);
  else if (key == "shuffle_incremental") shuffle_incremental = parse_bool(key, value);
  else if (key == "split_shuffle") split_shuffle = parse_bool(key, value);
  else if (key == "class_weight") class_weight = value;
  else if (key == "resample_minority") resample_minority = parse_bool(key, value);
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

void ExperimentConfig::validate() const {
  if (model != "perceptron" && model != "logistic" && model != "svm" &&
      model != "mlp") {
    throw std::invalid_argument("model must be perceptron|logistic|svm|mlp");
  }
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (train_fraction <= 0.0 || train_fraction >= 1.0) {
    throw std::invalid_argument("train_fraction must be in (0, 1)");
  }
  if (eval_every_k_batches < 1) {
    throw std::invalid_argument("eval_every_k_batches must be >= 1");
  }
  if (eta != -1.0 && eta <= 0.0) {
    throw std::invalid_argument("eta must be > 0");
  }
  if (epochs != -1 && epochs < 1) {
    throw std::invalid_argument("epochs must be >= 1");
  }
  if (l2 < 0.0) throw std::invalid_argument("l2 must be >= 0");
  if (hidden1 < 1 || hidden2 < 1) {
    throw std::invalid_argument("hidden layer sizes must be >= 1");
  }
  if (early_stop.max_forgetting < 0.0 || early_stop.max_forgetting > 1.0) {
    throw std::invalid_argument("early_stop.max_forgetting must be in [0, 1]");
  }
  if (early_stop.patience < 1) {
    throw std::invalid_argument("early_stop.patience must be >= 1");
  }
  if (lwf.lambda < 0.0) throw std::invalid_argument("lwf.lambda must be >= 0");
  if (lwf.temperature <= 0.0) {
    throw std::invalid_argument("lwf.temperature must be > 0");
  }
  if (lwf.enabled && model != "mlp") {
    throw std::invalid_argument("lwf requires model=mlp");
  }
  if (class_weight != "auto" && class_weight != "equal") {
    throw std::invalid_argument("class_weight must be auto|equal");
  }
  if (!offline_data.empty() && offline_data == incoming_data) {
    throw std::invalid_argument(
        "offline_data and incoming_data must be distinct");
  }
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open config: " + path);
  ExperimentConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw SchemaError(path + ":" + std::to_string(line_no) +
                        ": expected key=value");
    }
    std::string key(detail::trim(t.substr(0, eq)));
    std::string value(detail::trim(t.substr(eq + 1)));
    try {
      cfg.set(key, value);
    } catch (const std::invalid_argument& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return cfg;
}

const std::vector<std::string>& ExperimentConfig::known_keys() {
  static const std::vector<std::string> keys = {
      "offline_data",       "incoming_data",
      "output_dir",         "model",
      "eta",                "l2",
      "epochs",             "hidden1",
      "hidden2",            "batch_size",
      "train_fraction",     "seed",
      "eval_every_k_batches", "early_stop.enabled",
      "early_stop.max_forgetting", "early_stop.patience",
      "lwf.enabled",        "lwf.lambda",
      "lwf.temperature",    "clip_normalize",
      "shuffle_incremental", "split_shuffle",
      "class_weight",       "resample_minority",
  };
  return keys;
}

DatasetStats dataset_stats(std::span<const LabeledSample> samples) {
  DatasetStats stats;
  for (const LabeledSample& s : samples) {
    ++stats.by_origin_attack[{s.origin, s.attack_type}];
    (s.label == 0 ? stats.benign : stats.malicious)++;
  }
  return stats;
}

}  // namespace flowdrift
