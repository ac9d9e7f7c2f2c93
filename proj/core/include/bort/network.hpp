#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bort/ops.hpp"
#include "bort/tensor.hpp"

namespace bort {

enum class LayerKind { Conv2d, Dense, Relu, GlobalMaxPool, MaxPool2d, Flatten };

const char* layer_kind_name(LayerKind k);
LayerKind layer_kind_from_name(const std::string& s);

struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  std::string name;
  // conv2d
  int64_t in_channels = 0;
  int64_t out_channels = 0;
  ConvGeom geom;
  // dense
  int64_t in_dim = 0;
  int64_t out_dim = 0;
  // max_pool2d
  int64_t pool_k = 0;
  bool has_bias = true;

  bool has_weight() const { return kind == LayerKind::Conv2d || kind == LayerKind::Dense; }
  /// Flattened weight-matrix extents: conv [outC, inC*kh*kw], dense [out, in].
  int64_t weight_rows() const;
  int64_t weight_cols() const;

  static LayerSpec conv2d(std::string name, int64_t in_c, int64_t out_c, int64_t k, int64_t s,
                          int64_t p, bool bias = true);
  static LayerSpec dense(std::string name, int64_t in, int64_t out, bool bias = true);
  static LayerSpec relu(std::string name);
  static LayerSpec global_max_pool(std::string name);
  static LayerSpec max_pool2d(std::string name, int64_t k);
  static LayerSpec flatten(std::string name);
};

template <class T>
struct LayerParamsT {
  TensorT<T> weight;
  TensorT<T> bias;
};

/// Per-layer forward state kept for backprop and backtracking.
/// acts[i] is the input of layer i (so the pre-activation of a ReLU layer is
/// acts[relu index]); acts back() holds the logits.
template <class T>
struct TraceT {
  std::vector<TensorT<T>> acts;
  std::vector<MaskTensor> relu_mask;
  std::vector<IndexTensor> pool_argmax;
  bool enabled = false;
};

template <class T>
struct NetworkT {
  std::string arch;
  std::vector<LayerSpec> layers;
  std::vector<LayerParamsT<T>> params;
  std::vector<int> constrained;  // layer indices whose weight takes the orthogonality penalty
  std::vector<int64_t> input_shape;  // per sample: [C,H,W] or [D]

  int64_t param_count() const;
  int64_t num_classes() const;
  /// Shape of the input of layer i for a batch of n (validates composition).
  std::vector<int64_t> act_shape(int64_t layer, int64_t n) const;

  template <class U>
  NetworkT<U> cast() const {
    NetworkT<U> o;
    o.arch = arch;
    o.layers = layers;
    o.constrained = constrained;
    o.input_shape = input_shape;
    o.params.reserve(params.size());
    for (const auto& p : params)
      o.params.push_back({p.weight.template cast<U>(), p.bias.template cast<U>()});
    return o;
  }
};

using Network = NetworkT<float>;
using Network64 = NetworkT<double>;

template <class T>
struct GradientsT {
  std::vector<LayerParamsT<T>> params;  // aligned with net.layers
  TensorT<T> input;                     // d loss / d input
};

/// Throws ConfigError when consecutive layer shapes do not compose or a
/// parameter tensor has the wrong extents.
template <class T>
void validate(const NetworkT<T>& net);

/// Fan-in uniform init, biases zero, drawn from the run's seeded stream.
template <class T>
void init_params(NetworkT<T>& net, uint64_t seed);

template <class T>
TensorT<T> forward(const NetworkT<T>& net, const TensorT<T>& x, TraceT<T>* trace = nullptr);

template <class T>
GradientsT<T> backward(const NetworkT<T>& net, const TraceT<T>& trace, const TensorT<T>& dlogits);

template <class T>
struct LossResult {
  double loss = 0.0;
  TensorT<T> dlogits;
};

/// Mean negative log-softmax of the true class; dlogits = (softmax - onehot)/N.
template <class T>
LossResult<T> softmax_cross_entropy(const TensorT<T>& logits, const IndexTensor& labels);

/// Row-wise softmax probabilities.
template <class T>
TensorT<T> softmax(const TensorT<T>& logits);

/// Argmax per row, ties to the lowest index.
IndexTensor predict(const Tensor& logits);
double accuracy(const Tensor& logits, const IndexTensor& labels);

// Architectures.
enum class AcnnVariant { Mnist, Cifar10 };
Network build_acnn_small(AcnnVariant variant);
Network build_lenet_like();
/// Dense stack with ReLU between layers; dims lists every layer's output
/// width ending at the class count. Empty dims yields a flatten-only network.
Network build_mlp(std::vector<int64_t> input_shape, const std::vector<int64_t>& dims);

}  // namespace bort
