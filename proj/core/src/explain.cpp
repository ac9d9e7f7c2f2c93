#include "bort/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "bort/gemm.hpp"
#include "conv_detail.hpp"

namespace bort {

namespace {

constexpr int64_t kSeedChunk = 128;  // seeds backtracked per pass

template <class T>
void require_single_image_trace(const TraceT<T>& trace) {
  if (!trace.enabled || trace.acts.empty() || trace.acts[0].dim(0) != 1)
    throw Error("backtracking requires a trace from a single-image forward pass");
}

/// Index of the last global max pool (the "top feature map" boundary).
template <class T>
int find_pool_layer(const NetworkT<T>& net) {
  for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i)
    if (net.layers[static_cast<size_t>(i)].kind == LayerKind::GlobalMaxPool) return i;
  throw ConfigError("network has no global max pool layer to backtrack from");
}

/// Channel order of the pooled vector, descending, ties to the lowest index.
std::vector<int64_t> topk_channels(const Tensor& pooled, int64_t k) {
  const int64_t c = pooled.size();
  if (k < 0 || k > c)
    throw ConfigError("k=" + std::to_string(k) + " exceeds channel count " + std::to_string(c));
  std::vector<int64_t> order(static_cast<size_t>(c));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int64_t a, int64_t b) { return pooled[a] > pooled[b]; });
  order.resize(static_cast<size_t>(k));
  return order;
}

/// Adjoint of one conv layer applied to a K-batch of signals.
template <class T>
TensorT<T> conv_adjoint(const TensorT<T>& w, const ConvGeom& g, const TensorT<T>& cur,
                        const std::vector<int64_t>& in_shape) {
  const int64_t k = cur.dim(0), out_c = cur.dim(1), oh = cur.dim(2), ow = cur.dim(3);
  const int64_t l = oh * ow;
  const int64_t c = in_shape[1], h = in_shape[2], wd = in_shape[3];
  const int64_t rows = w.dim(1);
  std::vector<int64_t> out_shape = {k, c, h, wd};
  TensorT<T> out(out_shape);
  std::vector<T> sig_mat(static_cast<size_t>(out_c * k * l));
  std::vector<T> cols(static_cast<size_t>(rows * k * l));
  for (int64_t oc = 0; oc < out_c; ++oc)
    for (int64_t s = 0; s < k; ++s)
      std::memcpy(sig_mat.data() + oc * k * l + s * l, &cur.at4(s, oc, 0, 0),
                  static_cast<size_t>(l) * sizeof(T));
  blas::gemm(true, false, rows, k * l, out_c, T{1}, w.data(), rows, sig_mat.data(), k * l, T{0},
             cols.data(), k * l);
  detail::col2im_batched_add(cols.data(), k, c, h, wd, g, oh, ow, out.data());
  return out;
}

template <class T>
TensorT<T> backtrack_chunk(const NetworkT<T>& net, const TraceT<T>& trace,
                           const TensorT<T>& seeds, int from_layer) {
  TensorT<T> cur = seeds;
  for (int i = from_layer - 1; i >= 0; --i) {
    const LayerSpec& l = net.layers[static_cast<size_t>(i)];
    const auto& p = net.params[static_cast<size_t>(i)];
    const TensorT<T>& in = trace.acts[static_cast<size_t>(i)];
    const int64_t k = cur.dim(0);
    switch (l.kind) {
      case LayerKind::Conv2d:
        cur = conv_adjoint(p.weight, l.geom, cur, in.shape());
        break;
      case LayerKind::Dense: {
        TensorT<T> next({k, l.in_dim});
        blas::gemm(false, false, k, l.in_dim, l.out_dim, T{1}, cur.data(), l.out_dim,
                   p.weight.data(), l.in_dim, T{0}, next.data(), l.in_dim);
        cur = std::move(next);
        break;
      }
      case LayerKind::Relu: {
        const MaskTensor& m = trace.relu_mask[static_cast<size_t>(i)];
        const int64_t per = m.size();  // batch-1 mask broadcast over the K seeds
        T* d = cur.data();
        const uint8_t* pm = m.data();
        for (int64_t s = 0; s < k; ++s) {
          T* row = d + s * per;
          for (int64_t j = 0; j < per; ++j)
            if (!(pm[j] && row[j] > T{})) row[j] = T{};
        }
        break;
      }
      case LayerKind::GlobalMaxPool: {
        const IndexTensor& arg = trace.pool_argmax[static_cast<size_t>(i)];
        const int64_t c = in.dim(1), hw = in.dim(2) * in.dim(3);
        TensorT<T> next({k, c, in.dim(2), in.dim(3)});
        for (int64_t s = 0; s < k; ++s)
          for (int64_t ch = 0; ch < c; ++ch)
            next[(s * c + ch) * hw + arg[ch]] = cur.at2(s, ch);
        cur = std::move(next);
        break;
      }
      case LayerKind::MaxPool2d: {
        const IndexTensor& arg = trace.pool_argmax[static_cast<size_t>(i)];
        const int64_t c = in.dim(1), hw = in.dim(2) * in.dim(3);
        const int64_t ohw = arg.dim(2) * arg.dim(3);
        TensorT<T> next({k, c, in.dim(2), in.dim(3)});
        for (int64_t s = 0; s < k; ++s)
          for (int64_t ch = 0; ch < c; ++ch) {
            T* plane = next.data() + (s * c + ch) * hw;
            const T* src = cur.data() + (s * c + ch) * ohw;
            const int64_t* a = arg.data() + ch * ohw;
            for (int64_t q = 0; q < ohw; ++q) plane[a[q]] += src[q];
          }
        cur = std::move(next);
        break;
      }
      case LayerKind::Flatten: {
        std::vector<int64_t> shape = in.shape();
        shape[0] = k;
        cur = std::move(cur).reshaped(shape);
        break;
      }
    }
  }
  return cur;
}

/// Collapse [C,H,W] (or [1,...]) to a [H,W] magnitude grid.
Tensor magnitude_grid(const Tensor& signal, int64_t h, int64_t w) {
  Tensor grid({h, w});
  const int64_t channels = signal.size() / (h * w);
  for (int64_t c = 0; c < channels; ++c)
    for (int64_t i = 0; i < h * w; ++i)
      grid[i] = std::max(grid[i], std::abs(signal[c * h * w + i]));
  return grid;
}

/// Min-max to [0,1]; all-zero input is left untouched and flagged.
bool minmax_normalize(Tensor& grid) {
  float mn = grid[0], mx = grid[0];
  for (int64_t i = 1; i < grid.size(); ++i) {
    mn = std::min(mn, grid[i]);
    mx = std::max(mx, grid[i]);
  }
  if (mx > mn) {
    const float inv = 1.0f / (mx - mn);
    for (int64_t i = 0; i < grid.size(); ++i) grid[i] = (grid[i] - mn) * inv;
    return false;
  }
  if (mx > 0.0f) {
    grid.fill(1.0f);
    return false;
  }
  grid.fill(0.0f);
  return true;
}

struct PoolView {
  int pool_layer = 0;
  Tensor feature;  // [1,C,h,w], the top feature map
  Tensor pooled;   // [C]
  IndexTensor argmax;  // [C]
};

PoolView pool_view(const Network& net, const TraceT<float>& trace) {
  PoolView v;
  v.pool_layer = find_pool_layer(net);
  v.feature = trace.acts[static_cast<size_t>(v.pool_layer)];
  const Tensor& pooled = trace.acts[static_cast<size_t>(v.pool_layer) + 1];
  v.pooled = pooled.reshaped({pooled.size()});
  const IndexTensor& arg = trace.pool_argmax[static_cast<size_t>(v.pool_layer)];
  v.argmax = arg.reshaped({arg.size()});
  return v;
}

}  // namespace

template <class T>
BacktrackPlan plan_backtrack(const NetworkT<T>& net, const TraceT<T>& trace, int from_layer) {
  require_single_image_trace(trace);
  if (from_layer < 0 || from_layer > static_cast<int>(net.layers.size()))
    throw ConfigError("backtrack layer out of range");
  BacktrackPlan plan;
  plan.from_layer = from_layer;
  for (int i = from_layer - 1; i >= 0; --i)
    plan.steps.push_back({i, net.layers[static_cast<size_t>(i)].kind});
  return plan;
}

template <class T>
TensorT<T> reconstruct_linear(const TensorT<T>& w, const TensorT<T>& s) {
  if (w.ndim() != 2) throw ShapeError("reconstruct_linear expects a weight matrix");
  if (s.ndim() == 1) {
    if (s.dim(0) != w.dim(0))
      throw ShapeError("signal length " + std::to_string(s.dim(0)) + " != weight rows " +
                       std::to_string(w.dim(0)));
    TensorT<T> out({w.dim(1)});
    blas::gemm(true, false, w.dim(1), 1, w.dim(0), T{1}, w.data(), w.dim(1), s.data(), 1, T{0},
               out.data(), 1);
    return out;
  }
  if (s.ndim() == 2) return matmul(w, s, /*trans_a=*/true);
  throw ShapeError("reconstruct_linear expects [rows] or [rows,L] signal");
}

template <class T>
TensorT<T> guided_relu(const TensorT<T>& forward_act, const TensorT<T>& signal) {
  if (!forward_act.same_shape(signal)) throw ShapeError("guided_relu: shape mismatch");
  TensorT<T> out(signal.shape());
  for (int64_t i = 0; i < signal.size(); ++i)
    out[i] = (forward_act[i] > T{} && signal[i] > T{}) ? signal[i] : T{};
  return out;
}

template <class T>
TensorT<T> guided_backprop(const NetworkT<T>& net, const TraceT<T>& trace,
                           const TensorT<T>& seeds, int from_layer) {
  require_single_image_trace(trace);
  if (from_layer < 0 || from_layer > static_cast<int>(net.layers.size()))
    throw ConfigError("backtrack layer out of range");
  const std::vector<int64_t>& ref = trace.acts[static_cast<size_t>(from_layer)].shape();
  if (seeds.ndim() != static_cast<int64_t>(ref.size()))
    throw ShapeError("seed rank does not match layer input");
  for (size_t d = 1; d < ref.size(); ++d)
    if (seeds.dim(static_cast<int64_t>(d)) != ref[d])
      throw ShapeError("seed shape " + shape_str(seeds.shape()) +
                       " does not match layer input " + shape_str(ref));

  const int64_t total = seeds.dim(0);
  const int64_t per = seeds.size() / std::max<int64_t>(total, 1);
  std::vector<int64_t> in_shape = trace.acts[0].shape();
  const int64_t out_per = trace.acts[0].size();
  in_shape[0] = total;
  TensorT<T> result(in_shape);
  for (int64_t k0 = 0; k0 < total; k0 += kSeedChunk) {
    const int64_t kc = std::min(kSeedChunk, total - k0);
    std::vector<int64_t> chunk_shape = seeds.shape();
    chunk_shape[0] = kc;
    TensorT<T> chunk(chunk_shape);
    std::memcpy(chunk.data(), seeds.data() + k0 * per,
                static_cast<size_t>(kc * per) * sizeof(T));
    TensorT<T> got = backtrack_chunk(net, trace, chunk, from_layer);
    std::memcpy(result.data() + k0 * out_per, got.data(),
                static_cast<size_t>(kc * out_per) * sizeof(T));
  }
  return result;
}

template <class T>
double reconstruction_ratio(const NetworkT<T>& net, const TensorT<T>& x, int layer) {
  if (layer < 0 || layer >= static_cast<int>(net.layers.size()) ||
      !net.layers[static_cast<size_t>(layer)].has_weight())
    throw ConfigError("reconstruction_ratio needs a conv or dense layer");
  TraceT<T> trace;
  forward(net, x, &trace);
  const LayerSpec& l = net.layers[static_cast<size_t>(layer)];
  const TensorT<T>& z = trace.acts[static_cast<size_t>(layer)];
  TensorT<T> u;  // layer input in its own matrix domain
  if (l.kind == LayerKind::Conv2d) {
    u = unfold(z, l.geom);  // [1, rows, L]
    u = std::move(u).reshaped({u.dim(1), u.dim(2)});
  } else {
    u = z.reshaped({z.size(), 1});
  }
  const double unorm = static_cast<double>(norm2(u));
  if (unorm == 0.0) return std::nan("");
  const TensorT<T>& w = net.params[static_cast<size_t>(layer)].weight;
  TensorT<T> s = matmul(w, u);
  TensorT<T> uhat = matmul(w, s, /*trans_a=*/true);
  sub_inplace(uhat, u);
  return static_cast<double>(norm2(uhat)) / unorm;
}

template <class T>
std::vector<std::pair<int, double>> reconstruction_ratios(const NetworkT<T>& net,
                                                          const TensorT<T>& x) {
  std::vector<std::pair<int, double>> out;
  for (int i = 0; i < static_cast<int>(net.layers.size()); ++i)
    if (net.layers[static_cast<size_t>(i)].has_weight())
      out.emplace_back(i, reconstruction_ratio(net, x, i));
  return out;
}

SaliencyMap sat_saliency(const Network& net, const Tensor& x, int64_t k, float b, float gamma) {
  if (!(gamma > 0.0f && gamma < 1.0f)) throw ConfigError("gamma must lie in (0,1)");
  TraceT<float> trace;
  forward(net, x, &trace);
  const PoolView pv = pool_view(net, trace);
  const std::vector<int64_t> top = topk_channels(pv.pooled, k);

  const int64_t c = pv.feature.dim(1), fh = pv.feature.dim(2), fw = pv.feature.dim(3);
  Tensor seeds({k, c, fh, fw});
  for (int64_t j = 0; j < k; ++j) {
    const int64_t ch = top[static_cast<size_t>(j)];
    seeds[(j * c + ch) * fh * fw + pv.argmax[ch]] = b;
  }
  const Tensor signals = guided_backprop(net, trace, seeds, pv.pool_layer);

  const int64_t h = x.dim(2), w = x.dim(3);
  const int64_t per = signals.size() / std::max<int64_t>(k, 1);
  Tensor acc({h, w});
  for (int64_t j = 0; j < k; ++j) {
    const Tensor grid = magnitude_grid(
        Tensor({per}, std::vector<float>(signals.data() + j * per, signals.data() + (j + 1) * per)),
        h, w);
    float m = 0.0f;
    for (int64_t i = 0; i < grid.size(); ++i) m = std::max(m, grid[i]);
    if (m <= 0.0f) continue;
    const float thr = gamma * m;
    const float weight = pv.pooled[top[static_cast<size_t>(j)]];
    for (int64_t i = 0; i < grid.size(); ++i)
      if (grid[i] > thr) acc[i] += weight;
  }

  SaliencyMap map;
  map.method = "sat";
  map.k = k;
  map.source_layer = pv.pool_layer;
  map.degenerate = minmax_normalize(acc);
  map.grid = std::move(acc);
  return map;
}

SaliencyMap input_gradient_saliency(const Network& net, const Tensor& x) {
  TraceT<float> trace;
  const Tensor logits = forward(net, x, &trace);
  const IndexTensor pred = predict(logits);
  Tensor dlogits(logits.shape());
  dlogits.at2(0, pred[0]) = 1.0f;
  const GradientsT<float> g = backward(net, trace, dlogits);
  Tensor grid = magnitude_grid(g.input, x.dim(2), x.dim(3));
  SaliencyMap map;
  map.method = "input_grad";
  map.k = 0;
  map.source_layer = 0;
  map.degenerate = minmax_normalize(grid);
  map.grid = std::move(grid);
  return map;
}

std::vector<Tensor> decompose_topk(const Network& net, const Tensor& x, int64_t k, float b) {
  TraceT<float> trace;
  forward(net, x, &trace);
  const PoolView pv = pool_view(net, trace);
  const std::vector<int64_t> top = topk_channels(pv.pooled, k);

  const int64_t c = pv.feature.dim(1), fh = pv.feature.dim(2), fw = pv.feature.dim(3);
  Tensor seeds({k, c, fh, fw});
  for (int64_t j = 0; j < k; ++j) {
    const int64_t ch = top[static_cast<size_t>(j)];
    seeds[(j * c + ch) * fh * fw + pv.argmax[ch]] = b;
  }
  const Tensor signals = guided_backprop(net, trace, seeds, pv.pool_layer);
  std::vector<Tensor> out;
  const int64_t per = signals.size() / std::max<int64_t>(k, 1);
  std::vector<int64_t> shape(signals.shape().begin() + 1, signals.shape().end());
  for (int64_t j = 0; j < k; ++j)
    out.emplace_back(shape, std::vector<float>(signals.data() + j * per,
                                               signals.data() + (j + 1) * per));
  return out;
}

Tensor reconstruct_sparse(const Network& net, const Tensor& x, int64_t k, float b) {
  TraceT<float> trace;
  forward(net, x, &trace);
  const PoolView pv = pool_view(net, trace);
  const std::vector<int64_t> top = topk_channels(pv.pooled, k);

  const int64_t c = pv.feature.dim(1), fh = pv.feature.dim(2), fw = pv.feature.dim(3);
  Tensor seed({1, c, fh, fw});
  for (const int64_t ch : top) seed[ch * fh * fw + pv.argmax[ch]] = b;
  Tensor signal = guided_backprop(net, trace, seed, pv.pool_layer);
  std::vector<int64_t> shape(signal.shape().begin() + 1, signal.shape().end());
  return std::move(signal).reshaped(shape);
}

Tensor synthesize_adversarial(const Network& net, const Tensor& x_source, const Tensor& x_target,
                              int64_t k, float b) {
  TraceT<float> trace_src, trace_tgt;
  forward(net, x_source, &trace_src);
  forward(net, x_target, &trace_tgt);
  const PoolView src = pool_view(net, trace_src);
  const PoolView tgt = pool_view(net, trace_tgt);
  const std::vector<int64_t> top = topk_channels(tgt.pooled, k);

  const int64_t c = src.feature.dim(1), fh = src.feature.dim(2), fw = src.feature.dim(3);
  Tensor seed({1, c, fh, fw});
  // Channels chosen by the target's salience, placed at the source's spatial
  // positions, weighted by the target's pooled activation.
  for (const int64_t ch : top) seed[ch * fh * fw + src.argmax[ch]] = tgt.pooled[ch] * b;
  Tensor signal = guided_backprop(net, trace_src, seed, src.pool_layer);
  std::vector<int64_t> shape(signal.shape().begin() + 1, signal.shape().end());
  return std::move(signal).reshaped(shape);
}

DeletionInsertionResult deletion_insertion(const Network& net, const Tensor& x,
                                           const SaliencyMap& map, int64_t steps) {
  if (steps < 2) throw ConfigError("deletion_insertion: steps must be >= 2");
  const int64_t c = x.dim(1), h = x.dim(2), w = x.dim(3), hw = h * w;
  if (map.grid.ndim() != 2 || map.grid.dim(0) != h || map.grid.dim(1) != w)
    throw ShapeError("saliency map does not match image geometry");
  float mn = 0.0f, mx = 0.0f;
  for (int64_t i = 0; i < map.grid.size(); ++i) {
    mn = std::min(mn, map.grid[i]);
    mx = std::max(mx, map.grid[i]);
  }
  if (mn < 0.0f || mx > 1.0f || (!map.degenerate && mx != 1.0f))
    throw ConfigError("deletion_insertion: saliency map is not min-max normalized");

  std::vector<int64_t> order(static_cast<size_t>(hw));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int64_t a, int64_t b) { return map.grid[a] > map.grid[b]; });

  const Tensor logits = forward(net, x);
  const int64_t pred = predict(logits)[0];
  const Tensor probs = softmax(logits);

  const int64_t chunk = (hw + steps - 1) / steps;
  auto run_curve = [&](bool deletion) {
    // Variant s has the first min(s*chunk, HW) ranked pixels zeroed (deletion)
    // or restored onto a zero canvas (insertion).
    Tensor batch({steps + 1, c, h, w});
    for (int64_t s = 0; s <= steps; ++s) {
      float* img = batch.data() + s * c * hw;
      const int64_t touched = std::min(s * chunk, hw);
      if (deletion) {
        std::memcpy(img, x.data(), static_cast<size_t>(c * hw) * sizeof(float));
        for (int64_t i = 0; i < touched; ++i)
          for (int64_t ch = 0; ch < c; ++ch) img[ch * hw + order[static_cast<size_t>(i)]] = 0.0f;
      } else {
        for (int64_t i = 0; i < touched; ++i)
          for (int64_t ch = 0; ch < c; ++ch) {
            const int64_t px = order[static_cast<size_t>(i)];
            img[ch * hw + px] = x.data()[ch * hw + px];
          }
      }
    }
    std::vector<CurvePoint> curve(static_cast<size_t>(steps + 1));
    constexpr int64_t kEvalChunk = 128;
    for (int64_t s0 = 0; s0 <= steps; s0 += kEvalChunk) {
      const int64_t nc = std::min<int64_t>(kEvalChunk, steps + 1 - s0);
      Tensor sub({nc, c, h, w});
      std::memcpy(sub.data(), batch.data() + s0 * c * hw,
                  static_cast<size_t>(nc * c * hw) * sizeof(float));
      const Tensor p = softmax(forward(net, sub));
      for (int64_t i = 0; i < nc; ++i) {
        const int64_t s = s0 + i;
        curve[static_cast<size_t>(s)] = {
            static_cast<double>(std::min(s * chunk, hw)) / static_cast<double>(hw),
            static_cast<double>(p.at2(i, pred))};
      }
    }
    return curve;
  };

  DeletionInsertionResult r;
  r.predicted_class = pred;
  r.base_probability = probs.at2(0, pred);
  r.deletion = run_curve(true);
  r.insertion = run_curve(false);
  auto auc = [](const std::vector<CurvePoint>& c) {
    double s = 0.0;
    for (const auto& p : c) s += p.probability;
    return s / static_cast<double>(c.size());
  };
  r.del_auc = auc(r.deletion);
  r.ins_auc = auc(r.insertion);
  return r;
}

#define BORT_INSTANTIATE(T)                                                                   \
  template BacktrackPlan plan_backtrack<T>(const NetworkT<T>&, const TraceT<T>&, int);        \
  template TensorT<T> reconstruct_linear<T>(const TensorT<T>&, const TensorT<T>&);            \
  template TensorT<T> guided_relu<T>(const TensorT<T>&, const TensorT<T>&);                   \
  template TensorT<T> guided_backprop<T>(const NetworkT<T>&, const TraceT<T>&,                \
                                         const TensorT<T>&, int);                             \
  template double reconstruction_ratio<T>(const NetworkT<T>&, const TensorT<T>&, int);        \
  template std::vector<std::pair<int, double>> reconstruction_ratios<T>(const NetworkT<T>&,   \
                                                                        const TensorT<T>&);

BORT_INSTANTIATE(float)
BORT_INSTANTIATE(double)
#undef BORT_INSTANTIATE

}  // namespace bort
