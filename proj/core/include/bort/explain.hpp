#pragma once

#include <string>
#include <vector>

#include "bort/network.hpp"

namespace bort {

struct SaliencyMap {
  Tensor grid;  // [H,W] in [0,1]
  std::string method;
  int64_t k = 0;
  int64_t source_layer = -1;
  bool degenerate = false;  // all-zero attribution kept all-zero
};

/// Ordered inverse-layer descriptors from a chosen layer down to the input:
/// transposed-conv adjoints, guided ReLU masking, pool argmax routing.
struct BacktrackStep {
  int layer = 0;
  LayerKind kind = LayerKind::Relu;
};

struct BacktrackPlan {
  int from_layer = 0;
  std::vector<BacktrackStep> steps;  // depth equals from_layer
};

template <class T>
BacktrackPlan plan_backtrack(const NetworkT<T>& net, const TraceT<T>& trace, int from_layer);

/// One-step linear reconstruction W^T s (Eq.-style patch-space inverse).
/// s is [rows] or [rows, L]; the result is [cols] or [cols, L].
template <class T>
TensorT<T> reconstruct_linear(const TensorT<T>& w, const TensorT<T>& s);

/// The guided ReLU rule applied elementwise: keep signal where both the
/// stored forward activation and the backward signal are positive.
template <class T>
TensorT<T> guided_relu(const TensorT<T>& forward_act, const TensorT<T>& signal);

/// Descends from the input space of `from_layer` to the network input.
/// `trace` must come from a single-image forward pass; `seeds` carries K
/// independent signals shaped like that layer's per-sample input and shares
/// the image's ReLU masks and pool routing. Biases are ignored throughout.
template <class T>
TensorT<T> guided_backprop(const NetworkT<T>& net, const TraceT<T>& trace,
                           const TensorT<T>& seeds, int from_layer);

/// ||u - W^T W u|| / ||u|| for one weighted layer, measured in the layer's
/// own input domain (im2col patch space for conv). Returns NaN for a
/// zero-norm input.
template <class T>
double reconstruction_ratio(const NetworkT<T>& net, const TensorT<T>& x, int layer);

/// Ratios for every conv/dense layer, in layer order (layer index, ratio).
template <class T>
std::vector<std::pair<int, double>> reconstruction_ratios(const NetworkT<T>& net,
                                                          const TensorT<T>& x);

/// Salient activation tracking: seeds the max position of each of the top-k
/// pooled channels, backtracks each seed, binarizes |signal| at
/// gamma * max|signal|, and accumulates masks weighted by the pooled
/// activations; min-max normalized.
SaliencyMap sat_saliency(const Network& net, const Tensor& x, int64_t k, float b, float gamma);

/// |d logit(predicted) / d input|, min-max normalized. The comparison
/// baseline interpreter.
SaliencyMap input_gradient_saliency(const Network& net, const Tensor& x);

/// Top-k single-activation seeds backtracked separately; k signals in input
/// space, ordered by descending pooled activation.
std::vector<Tensor> decompose_topk(const Network& net, const Tensor& x, int64_t k, float b);

/// Sparse binarized feature map (value b at the argmax of each top-k
/// channel) backtracked in one pass.
Tensor reconstruct_sparse(const Network& net, const Tensor& x, int64_t k, float b = 1.0f);

/// Synthesis: channel set from the target's top-k pooled activations,
/// positions from the source's per-channel argmax, values y_t[i] * b;
/// backtracked through the source's trace.
Tensor synthesize_adversarial(const Network& net, const Tensor& x_source, const Tensor& x_target,
                              int64_t k, float b);

struct CurvePoint {
  double fraction = 0.0;  // of pixels removed/restored
  double probability = 0.0;
};

struct DeletionInsertionResult {
  double del_auc = 0.0;
  double ins_auc = 0.0;
  std::vector<CurvePoint> deletion;
  std::vector<CurvePoint> insertion;
  int64_t predicted_class = -1;
  double base_probability = 0.0;
};

/// Removes (zero-fill) / restores (onto a zero canvas) pixels in saliency
/// order, ceil(HW/steps) per step, recording the softmax probability of the
/// originally predicted class; AUC is the mean over the steps+1 grid points.
DeletionInsertionResult deletion_insertion(const Network& net, const Tensor& x,
                                           const SaliencyMap& map, int64_t steps);

}  // namespace bort
