#pragma once

#include <algorithm>
#include <cstring>

#include "bort/ops.hpp"

namespace bort::detail {

// Batched im2col in matrix layout: the column matrix is [C*kh*kw, n*L] and
// sample s occupies columns [s*L, (s+1)*L). Lowering a whole chunk this way
// lets one GEMM cover the chunk, so the BLAS packs the weight matrix once.

constexpr int64_t kConvChunkBytes = 256ll << 20;

template <class T>
void im2col_batched(const T* src, int64_t n, int64_t c, int64_t h, int64_t w, const ConvGeom& g,
                    int64_t oh, int64_t ow, T* dst) {
  const int64_t l = oh * ow;
  const int64_t total = n * l;
  for (int64_t s = 0; s < n; ++s) {
    const T* img = src + s * c * h * w;
    for (int64_t ch = 0; ch < c; ++ch) {
      for (int64_t ki = 0; ki < g.kh; ++ki) {
        for (int64_t kj = 0; kj < g.kw; ++kj) {
          T* row = dst + ((ch * g.kh + ki) * g.kw + kj) * total + s * l;
          for (int64_t y = 0; y < oh; ++y) {
            const int64_t iy = y * g.sh - g.ph + ki;
            T* out_row = row + y * ow;
            if (iy < 0 || iy >= h) {
              std::fill(out_row, out_row + ow, T{});
              continue;
            }
            const T* in_row = img + (ch * h + iy) * w;
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
}

template <class T>
void col2im_batched_add(const T* cols, int64_t n, int64_t c, int64_t h, int64_t w,
                        const ConvGeom& g, int64_t oh, int64_t ow, T* dst) {
  const int64_t l = oh * ow;
  const int64_t total = n * l;
  for (int64_t s = 0; s < n; ++s) {
    T* img = dst + s * c * h * w;
    for (int64_t ch = 0; ch < c; ++ch) {
      for (int64_t ki = 0; ki < g.kh; ++ki) {
        for (int64_t kj = 0; kj < g.kw; ++kj) {
          const T* row = cols + ((ch * g.kh + ki) * g.kw + kj) * total + s * l;
          for (int64_t y = 0; y < oh; ++y) {
            const int64_t iy = y * g.sh - g.ph + ki;
            if (iy < 0 || iy >= h) continue;
            T* out_row = img + (ch * h + iy) * w;
            const T* in_row = row + y * ow;
            const int64_t x0 = -g.pw + kj;
            if (g.sw == 1 && x0 >= 0 && x0 + ow <= w) {
              T* o = out_row + x0;
              for (int64_t x = 0; x < ow; ++x) o[x] += in_row[x];
            } else {
              for (int64_t x = 0; x < ow; ++x) {
                const int64_t ix = x * g.sw - g.pw + kj;
                if (ix >= 0 && ix < w) out_row[ix] += in_row[x];
              }
            }
          }
        }
      }
    }
  }
}

template <class T>
int64_t conv_chunk(int64_t n, int64_t rows, int64_t l) {
  const int64_t per_sample = rows * l * static_cast<int64_t>(sizeof(T)) * 2;  // cols + scratch
  return std::clamp<int64_t>(kConvChunkBytes / std::max<int64_t>(per_sample, 1), 1, n);
}

}  // namespace bort::detail
