#pragma once

#include <utility>

#include "bort/tensor.hpp"

namespace bort {

/// Convolution window geometry. Output extents must divide exactly; silent
/// flooring would corrupt every shape derived downstream.
struct ConvGeom {
  int64_t kh = 1, kw = 1;
  int64_t sh = 1, sw = 1;
  int64_t ph = 0, pw = 0;

  int64_t out_h(int64_t in_h) const { return out_extent(in_h, kh, sh, ph); }
  int64_t out_w(int64_t in_w) const { return out_extent(in_w, kw, sw, pw); }

  static int64_t out_extent(int64_t in, int64_t k, int64_t s, int64_t p);
};

template <class T>
struct ReluResult {
  TensorT<T> y;
  TensorT<T> mask;  // 1 where input > 0
};

template <class T>
struct PoolResult {
  TensorT<T> y;
  IndexTensor argmax;  // flat winning position, ties resolved to the lowest index
};

/// c[i,j] = sum_k op(a)[i,k] * op(b)[k,j]; BLAS-backed.
template <class T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b, bool trans_a = false,
                  bool trans_b = false);

/// im2col: [N,C,H,W] -> [N, C*kh*kw, L], column l = receptive field of output
/// location l (l = oh*outW + ow), rows ordered (c, ki, kj).
template <class T>
TensorT<T> unfold(const TensorT<T>& input, const ConvGeom& g);

/// col2im, exact adjoint of unfold: overlapping contributions are summed.
template <class T>
TensorT<T> fold(const TensorT<T>& columns, const std::vector<int64_t>& output_shape,
                const ConvGeom& g);

template <class T>
ReluResult<T> relu_forward(const TensorT<T>& x);

/// [N,C,H,W] -> per-channel spatial max with flat argmax.
template <class T>
PoolResult<T> global_max_pool(const TensorT<T>& x);

/// Windowed max pool (kernel k, stride k). argmax stores flat H*W positions.
template <class T>
PoolResult<T> max_pool2d(const TensorT<T>& x, int64_t k);

// Explicit instantiations exist for float and double.

}  // namespace bort
