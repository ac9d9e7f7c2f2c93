#include "bort/ops.hpp"

#include <algorithm>
#include <cstring>

#include "bort/gemm.hpp"

namespace bort {

int64_t ConvGeom::out_extent(int64_t in, int64_t k, int64_t s, int64_t p) {
  const int64_t span = in + 2 * p - k;
  if (k < 1 || s < 1 || p < 0) throw ConfigError("invalid convolution window");
  if (span < 0) throw ConfigError("kernel larger than padded input");
  if (span % s != 0)
    throw ConfigError("convolution geometry does not divide exactly (in=" + std::to_string(in) +
                      " k=" + std::to_string(k) + " s=" + std::to_string(s) +
                      " p=" + std::to_string(p) + ")");
  return span / s + 1;
}

template <class T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b, bool trans_a, bool trans_b) {
  if (a.ndim() != 2 || b.ndim() != 2) throw ShapeError("matmul expects rank-2 tensors");
  const int64_t m = trans_a ? a.dim(1) : a.dim(0);
  const int64_t ka = trans_a ? a.dim(0) : a.dim(1);
  const int64_t kb = trans_b ? b.dim(1) : b.dim(0);
  const int64_t n = trans_b ? b.dim(0) : b.dim(1);
  if (ka != kb)
    throw ShapeError("matmul inner dimensions differ: " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  TensorT<T> c({m, n});
  if (m == 0 || n == 0) return c;
  if (ka == 0) return c;
  blas::gemm(trans_a, trans_b, m, n, ka, T{1}, a.data(), a.dim(1), b.data(), b.dim(1), T{0},
             c.data(), n);
  return c;
}

template <class T>
TensorT<T> unfold(const TensorT<T>& input, const ConvGeom& g) {
  if (input.ndim() != 4) throw ShapeError("unfold expects [N,C,H,W]");
  const int64_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int64_t oh = g.out_h(h), ow = g.out_w(w);
  const int64_t l = oh * ow;
  const int64_t rows = c * g.kh * g.kw;
  TensorT<T> out({n, rows, l});

  const T* src = input.data();
  T* dst = out.data();
  for (int64_t s = 0; s < n; ++s) {
    const T* img = src + s * c * h * w;
    T* cols = dst + s * rows * l;
    for (int64_t ch = 0; ch < c; ++ch) {
      for (int64_t ki = 0; ki < g.kh; ++ki) {
        for (int64_t kj = 0; kj < g.kw; ++kj) {
          T* row = cols + ((ch * g.kh + ki) * g.kw + kj) * l;
          for (int64_t y = 0; y < oh; ++y) {
            const int64_t iy = y * g.sh - g.ph + ki;
            T* out_row = row + y * ow;
            if (iy < 0 || iy >= h) {
              std::fill(out_row, out_row + ow, T{});
              continue;
            }
            const T* in_row = img + (ch * h + iy) * w;
            // Contiguous span when sw == 1 and no horizontal clipping.
            const int64_t x0 = -g.pw + kj;
            if (g.sw == 1 && x0 >= 0 && x0 + ow <= w) {
              std::memcpy(out_row, in_row + x0, static_cast<size_t>(ow) * sizeof(T));
            } else {
              for (int64_t x = 0; x < ow; ++x) {
                const int64_t ix = x * g.sw - g.pw + kj;
                out_row[x] = (ix >= 0 && ix < w) ? in_row[ix] : T{};
              }
            }
          }
        }
      }
    }
  }
  return out;
}

template <class T>
TensorT<T> fold(const TensorT<T>& columns, const std::vector<int64_t>& output_shape,
                const ConvGeom& g) {
  if (columns.ndim() != 3) throw ShapeError("fold expects [N, C*kh*kw, L]");
  if (output_shape.size() != 4) throw ShapeError("fold output shape must be [N,C,H,W]");
  const int64_t n = output_shape[0], c = output_shape[1], h = output_shape[2],
                w = output_shape[3];
  const int64_t oh = g.out_h(h), ow = g.out_w(w);
  const int64_t l = oh * ow;
  const int64_t rows = c * g.kh * g.kw;
  if (columns.dim(0) != n || columns.dim(1) != rows || columns.dim(2) != l)
    throw ShapeError("fold columns " + shape_str(columns.shape()) +
                     " inconsistent with geometry for output " + shape_str(output_shape));

  TensorT<T> out(output_shape);
  const T* src = columns.data();
  T* dst = out.data();
  for (int64_t s = 0; s < n; ++s) {
    const T* cols = src + s * rows * l;
    T* img = dst + s * c * h * w;
    for (int64_t ch = 0; ch < c; ++ch) {
      for (int64_t ki = 0; ki < g.kh; ++ki) {
        for (int64_t kj = 0; kj < g.kw; ++kj) {
          const T* row = cols + ((ch * g.kh + ki) * g.kw + kj) * l;
          for (int64_t y = 0; y < oh; ++y) {
            const int64_t iy = y * g.sh - g.ph + ki;
            if (iy < 0 || iy >= h) continue;
            T* out_row = img + (ch * h + iy) * w;
            const T* in_row = row + y * ow;
            for (int64_t x = 0; x < ow; ++x) {
              const int64_t ix = x * g.sw - g.pw + kj;
              if (ix >= 0 && ix < w) out_row[ix] += in_row[x];
            }
          }
        }
      }
    }
  }
  return out;
}

template <class T>
ReluResult<T> relu_forward(const TensorT<T>& x) {
  ReluResult<T> r{TensorT<T>(x.shape()), TensorT<T>(x.shape())};
  const T* px = x.data();
  T* py = r.y.data();
  T* pm = r.mask.data();
  const int64_t n = x.size();
  for (int64_t i = 0; i < n; ++i) {
    const bool on = px[i] > T{};
    py[i] = on ? px[i] : T{};
    pm[i] = on ? T{1} : T{};
  }
  return r;
}

template <class T>
PoolResult<T> global_max_pool(const TensorT<T>& x) {
  if (x.ndim() != 4) throw ShapeError("global_max_pool expects [N,C,H,W]");
  const int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  if (hw < 1) throw ShapeError("global_max_pool needs H,W >= 1");
  PoolResult<T> r{TensorT<T>({n, c}), IndexTensor({n, c})};
  const T* px = x.data();
  for (int64_t i = 0; i < n * c; ++i) {
    const T* slice = px + i * hw;
    T best = slice[0];
    int64_t arg = 0;
    for (int64_t j = 1; j < hw; ++j) {
      if (slice[j] > best) {
        best = slice[j];
        arg = j;
      }
    }
    r.y[i] = best;
    r.argmax[i] = arg;
  }
  return r;
}

template <class T>
PoolResult<T> max_pool2d(const TensorT<T>& x, int64_t k) {
  if (x.ndim() != 4) throw ShapeError("max_pool2d expects [N,C,H,W]");
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (k < 1 || h % k != 0 || w % k != 0)
    throw ConfigError("max_pool2d window must tile the input exactly");
  const int64_t oh = h / k, ow = w / k;
  PoolResult<T> r{TensorT<T>({n, c, oh, ow}), IndexTensor({n, c, oh, ow})};
  const T* px = x.data();
  T* py = r.y.data();
  int64_t* pa = r.argmax.data();
  for (int64_t i = 0; i < n * c; ++i) {
    const T* plane = px + i * h * w;
    T* out_plane = py + i * oh * ow;
    int64_t* arg_plane = pa + i * oh * ow;
    for (int64_t y = 0; y < oh; ++y) {
      for (int64_t x0 = 0; x0 < ow; ++x0) {
        T best{};
        int64_t arg = -1;
        for (int64_t ki = 0; ki < k; ++ki) {
          const int64_t iy = y * k + ki;
          for (int64_t kj = 0; kj < k; ++kj) {
            const int64_t ix = x0 * k + kj;
            const T v = plane[iy * w + ix];
            if (arg < 0 || v > best) {
              best = v;
              arg = iy * w + ix;
            }
          }
        }
        out_plane[y * ow + x0] = best;
        arg_plane[y * ow + x0] = arg;
      }
    }
  }
  return r;
}

#define BORT_INSTANTIATE(T)                                                               \
  template TensorT<T> matmul<T>(const TensorT<T>&, const TensorT<T>&, bool, bool);        \
  template TensorT<T> unfold<T>(const TensorT<T>&, const ConvGeom&);                      \
  template TensorT<T> fold<T>(const TensorT<T>&, const std::vector<int64_t>&,             \
                              const ConvGeom&);                                           \
  template ReluResult<T> relu_forward<T>(const TensorT<T>&);                              \
  template PoolResult<T> global_max_pool<T>(const TensorT<T>&);                           \
  template PoolResult<T> max_pool2d<T>(const TensorT<T>&, int64_t);

BORT_INSTANTIATE(float)
BORT_INSTANTIATE(double)
#undef BORT_INSTANTIATE

}  // namespace bort
