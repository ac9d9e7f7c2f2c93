#pragma once

#include <string>

#include <json.hpp>

#include "bort/dataset.hpp"
#include "bort/network.hpp"
#include "bort/optimizer.hpp"

namespace bort {

struct DataSpec {
  std::string kind = "synthetic";  // mnist | cifar10 | synthetic
  std::string dir;                 // dataset directory for mnist/cifar10
  int64_t n_train = 512;           // synthetic only
  int64_t n_test = 128;
  int64_t classes = 4;
  int64_t image_size = 16;
  uint64_t seed = 1;
};

/// One fully-determined run: given the dataset bytes, the config fixes every
/// result. Parsed strictly (unknown keys are errors); defaults are echoed
/// back into the manifest.
struct ExperimentConfig {
  std::string model = "mlp:32,10";  // acnn_small_mnist|acnn_small_cifar10|lenet|mlp:<dims>
  std::string optimizer = "sgd";    // sgd|sgd_momentum|adamw
  bool bort_enabled = false;
  double bort_lambda = 0.1;
  bool bort_coupled = false;
  double lr = 0.01;
  double weight_decay = 0.0;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t epochs = 1;
  int64_t batch_size = 256;
  uint64_t seed = 0;
  DataSpec data;
  std::string output_dir = "runs/out";

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::string& path);
  nlohmann::json to_json() const;

  BortConfig optimizer_config() const;
};

struct LoadedData {
  Dataset train;
  Dataset test;
};

LoadedData load_data(const DataSpec& spec);

/// Builds and seeds the model named by the config; validates that the data's
/// sample shape matches the network input.
Network build_model(const std::string& model, const std::vector<int64_t>& sample_shape,
                    uint64_t seed);

}  // namespace bort
