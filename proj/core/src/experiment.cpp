#include "bort/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "bort/rng.hpp"

namespace bort {

namespace {

void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& known,
                         const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError(where + ": unknown key \"" + it.key() + "\"");
}

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config field \"") + key + "\" has the wrong type");
  }
}

std::vector<int64_t> parse_mlp_dims(const std::string& model) {
  std::vector<int64_t> dims;
  const std::string spec = model.substr(4);
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      dims.push_back(std::stoll(tok));
    } catch (...) {
      throw ConfigError("bad mlp dimension \"" + tok + "\" in " + model);
    }
    if (dims.back() < 1) throw ConfigError("mlp dimensions must be positive");
  }
  return dims;
}

std::string join_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

std::string existing(const std::string& base) {
  if (std::filesystem::exists(base)) return base;
  if (std::filesystem::exists(base + ".gz")) return base + ".gz";
  throw IoError("dataset file not found: " + base + "[.gz]");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, {"model", "optimizer", "bort", "lr", "weight_decay", "momentum",
                          "beta1", "beta2", "eps", "epochs", "batch_size", "seed", "data",
                          "output_dir"},
                      "config");
  ExperimentConfig c;
  read_field(j, "model", c.model);
  read_field(j, "optimizer", c.optimizer);
  if (j.contains("bort")) {
    const auto& b = j.at("bort");
    reject_unknown_keys(b, {"enabled", "lambda", "coupled"}, "config.bort");
    read_field(b, "enabled", c.bort_enabled);
    read_field(b, "lambda", c.bort_lambda);
    read_field(b, "coupled", c.bort_coupled);
  }
  read_field(j, "lr", c.lr);
  read_field(j, "weight_decay", c.weight_decay);
  read_field(j, "momentum", c.momentum);
  read_field(j, "beta1", c.beta1);
  read_field(j, "beta2", c.beta2);
  read_field(j, "eps", c.eps);
  read_field(j, "epochs", c.epochs);
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "seed", c.seed);
  if (j.contains("data")) {
    const auto& d = j.at("data");
    reject_unknown_keys(d, {"kind", "dir", "n_train", "n_test", "classes", "image_size", "seed"},
                        "config.data");
    read_field(d, "kind", c.data.kind);
    read_field(d, "dir", c.data.dir);
    read_field(d, "n_train", c.data.n_train);
    read_field(d, "n_test", c.data.n_test);
    read_field(d, "classes", c.data.classes);
    read_field(d, "image_size", c.data.image_size);
    read_field(d, "seed", c.data.seed);
  }
  read_field(j, "output_dir", c.output_dir);

  base_kind_from_name(c.optimizer);  // validates
  if (c.data.kind != "mnist" && c.data.kind != "cifar10" && c.data.kind != "synthetic")
    throw ConfigError("data.kind must be mnist, cifar10, or synthetic");
  if ((c.data.kind == "mnist" || c.data.kind == "cifar10") && c.data.dir.empty())
    throw ConfigError("data.dir is required for " + c.data.kind);
  if (c.model != "acnn_small_mnist" && c.model != "acnn_small_cifar10" && c.model != "lenet" &&
      c.model.rfind("mlp:", 0) != 0)
    throw ConfigError("unknown model \"" + c.model + "\"");
  if (c.epochs < 1 || c.batch_size < 1) throw ConfigError("epochs and batch_size must be >= 1");
  if (c.lr <= 0.0) throw ConfigError("lr must be positive");
  if (c.bort_lambda < 0.0 || c.weight_decay < 0.0)
    throw ConfigError("coefficients must be >= 0");
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["model"] = model;
  j["optimizer"] = optimizer;
  j["bort"] = {{"enabled", bort_enabled}, {"lambda", bort_lambda}, {"coupled", bort_coupled}};
  j["lr"] = lr;
  j["weight_decay"] = weight_decay;
  j["momentum"] = momentum;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["eps"] = eps;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["seed"] = seed;
  j["data"] = {{"kind", data.kind},       {"dir", data.dir},
               {"n_train", data.n_train}, {"n_test", data.n_test},
               {"classes", data.classes}, {"image_size", data.image_size},
               {"seed", data.seed}};
  j["output_dir"] = output_dir;
  return j;
}

BortConfig ExperimentConfig::optimizer_config() const {
  BortConfig b;
  b.base = base_kind_from_name(optimizer);
  b.lr = lr;
  b.lambda = bort_enabled ? bort_lambda : 0.0;
  b.weight_decay = weight_decay;
  b.momentum = momentum;
  b.beta1 = beta1;
  b.beta2 = beta2;
  b.eps = eps;
  b.coupled_penalty = bort_coupled;
  b.epochs = epochs;
  b.batch_size = batch_size;
  b.seed = seed;
  return b;
}

LoadedData load_data(const DataSpec& spec) {
  LoadedData d;
  if (spec.kind == "mnist") {
    d.train = load_mnist_idx(existing(join_path(spec.dir, "train-images-idx3-ubyte")),
                             existing(join_path(spec.dir, "train-labels-idx1-ubyte")), "train");
    d.test = load_mnist_idx(existing(join_path(spec.dir, "t10k-images-idx3-ubyte")),
                            existing(join_path(spec.dir, "t10k-labels-idx1-ubyte")), "test");
  } else if (spec.kind == "cifar10") {
    std::vector<std::string> train_files;
    for (int i = 1; i <= 5; ++i)
      train_files.push_back(existing(join_path(spec.dir, "data_batch_" + std::to_string(i) + ".bin")));
    d.train = load_cifar10(train_files, "train");
    d.test = load_cifar10({existing(join_path(spec.dir, "test_batch.bin"))}, "test");
  } else {
    d.train = synthetic_blobs(spec.n_train, spec.classes, spec.image_size, spec.seed);
    // Test split drawn from a shifted stream of the same generator family.
    d.test = synthetic_blobs(spec.n_test, spec.classes, spec.image_size,
                             mix_seed(spec.seed, 0x7e57));
    d.test.split = "test";
  }
  return d;
}

Network build_model(const std::string& model, const std::vector<int64_t>& sample_shape,
                    uint64_t seed) {
  Network net;
  if (model == "acnn_small_mnist") {
    net = build_acnn_small(AcnnVariant::Mnist);
  } else if (model == "acnn_small_cifar10") {
    net = build_acnn_small(AcnnVariant::Cifar10);
  } else if (model == "lenet") {
    net = build_lenet_like();
  } else if (model.rfind("mlp:", 0) == 0) {
    net = build_mlp(sample_shape, parse_mlp_dims(model));
  } else {
    throw ConfigError("unknown model \"" + model + "\"");
  }
  if (net.input_shape != sample_shape)
    throw ConfigError("model " + model + " expects input " + shape_str(net.input_shape) +
                      " but the dataset provides " + shape_str(sample_shape));
  init_params(net, seed);
  return net;
}

}  // namespace bort
