#include "bort/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "bort/gemm.hpp"
#include "bort/rng.hpp"
#include "conv_detail.hpp"

namespace bort {

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::Dense: return "dense";
    case LayerKind::Relu: return "relu";
    case LayerKind::GlobalMaxPool: return "global_max_pool";
    case LayerKind::MaxPool2d: return "max_pool2d";
    case LayerKind::Flatten: return "flatten";
  }
  return "?";
}

LayerKind layer_kind_from_name(const std::string& s) {
  if (s == "conv2d") return LayerKind::Conv2d;
  if (s == "dense") return LayerKind::Dense;
  if (s == "relu") return LayerKind::Relu;
  if (s == "global_max_pool") return LayerKind::GlobalMaxPool;
  if (s == "max_pool2d") return LayerKind::MaxPool2d;
  if (s == "flatten") return LayerKind::Flatten;
  throw ConfigError("unknown layer kind: " + s);
}

int64_t LayerSpec::weight_rows() const {
  if (kind == LayerKind::Conv2d) return out_channels;
  if (kind == LayerKind::Dense) return out_dim;
  return 0;
}

int64_t LayerSpec::weight_cols() const {
  if (kind == LayerKind::Conv2d) return in_channels * geom.kh * geom.kw;
  if (kind == LayerKind::Dense) return in_dim;
  return 0;
}

LayerSpec LayerSpec::conv2d(std::string name, int64_t in_c, int64_t out_c, int64_t k, int64_t s,
                            int64_t p, bool bias) {
  LayerSpec l;
  l.kind = LayerKind::Conv2d;
  l.name = std::move(name);
  l.in_channels = in_c;
  l.out_channels = out_c;
  l.geom = ConvGeom{k, k, s, s, p, p};
  l.has_bias = bias;
  return l;
}

LayerSpec LayerSpec::dense(std::string name, int64_t in, int64_t out, bool bias) {
  LayerSpec l;
  l.kind = LayerKind::Dense;
  l.name = std::move(name);
  l.in_dim = in;
  l.out_dim = out;
  l.has_bias = bias;
  return l;
}

LayerSpec LayerSpec::relu(std::string name) {
  LayerSpec l;
  l.kind = LayerKind::Relu;
  l.name = std::move(name);
  l.has_bias = false;
  return l;
}

LayerSpec LayerSpec::global_max_pool(std::string name) {
  LayerSpec l;
  l.kind = LayerKind::GlobalMaxPool;
  l.name = std::move(name);
  l.has_bias = false;
  return l;
}

LayerSpec LayerSpec::max_pool2d(std::string name, int64_t k) {
  LayerSpec l;
  l.kind = LayerKind::MaxPool2d;
  l.name = std::move(name);
  l.pool_k = k;
  l.has_bias = false;
  return l;
}

LayerSpec LayerSpec::flatten(std::string name) {
  LayerSpec l;
  l.kind = LayerKind::Flatten;
  l.name = std::move(name);
  l.has_bias = false;
  return l;
}

namespace {

using detail::col2im_batched_add;
using detail::conv_chunk;
using detail::im2col_batched;

template <class T>
TensorT<T> conv_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& bias,
                        const ConvGeom& g) {
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int64_t out_c = w.dim(0), rows = w.dim(1);
  if (rows != c * g.kh * g.kw)
    throw ShapeError("conv weight columns " + std::to_string(rows) + " do not match input " +
                     shape_str(x.shape()));
  const int64_t oh = g.out_h(h), ow = g.out_w(wd), l = oh * ow;
  TensorT<T> y({n, out_c, oh, ow});
  const int64_t chunk = conv_chunk<T>(n, rows, l);
  std::vector<T> cols(static_cast<size_t>(rows * chunk * l));
  std::vector<T> scratch(static_cast<size_t>(out_c * chunk * l));
  for (int64_t n0 = 0; n0 < n; n0 += chunk) {
    const int64_t nc = std::min(chunk, n - n0);
    im2col_batched(x.data() + n0 * c * h * wd, nc, c, h, wd, g, oh, ow, cols.data());
    blas::gemm(false, false, out_c, nc * l, rows, T{1}, w.data(), rows, cols.data(), nc * l,
               T{0}, scratch.data(), nc * l);
    for (int64_t oc = 0; oc < out_c; ++oc) {
      const T b = bias.empty() ? T{} : bias[oc];
      for (int64_t s = 0; s < nc; ++s) {
        const T* src = scratch.data() + oc * nc * l + s * l;
        T* dst = &y.at4(n0 + s, oc, 0, 0);
        if (b == T{}) {
          std::memcpy(dst, src, static_cast<size_t>(l) * sizeof(T));
        } else {
          for (int64_t i = 0; i < l; ++i) dst[i] = src[i] + b;
        }
      }
    }
  }
  return y;
}

template <class T>
void conv_backward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& dy,
                   const ConvGeom& g, bool has_bias, TensorT<T>& dx, TensorT<T>& dw,
                   TensorT<T>& db) {
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int64_t out_c = w.dim(0), rows = w.dim(1);
  const int64_t oh = g.out_h(h), ow = g.out_w(wd), l = oh * ow;
  dx = TensorT<T>(x.shape());
  dw = TensorT<T>(w.shape());
  db = has_bias ? TensorT<T>({out_c}) : TensorT<T>();
  const int64_t chunk = conv_chunk<T>(n, rows, l);
  std::vector<T> cols(static_cast<size_t>(rows * chunk * l));
  std::vector<T> dy_mat(static_cast<size_t>(out_c * chunk * l));
  std::vector<T> dcols(static_cast<size_t>(rows * chunk * l));
  for (int64_t n0 = 0; n0 < n; n0 += chunk) {
    const int64_t nc = std::min(chunk, n - n0);
    for (int64_t oc = 0; oc < out_c; ++oc)
      for (int64_t s = 0; s < nc; ++s)
        std::memcpy(dy_mat.data() + oc * nc * l + s * l, &dy.at4(n0 + s, oc, 0, 0),
                    static_cast<size_t>(l) * sizeof(T));
    im2col_batched(x.data() + n0 * c * h * wd, nc, c, h, wd, g, oh, ow, cols.data());
    // dW += dY * cols^T
    blas::gemm(false, true, out_c, rows, nc * l, T{1}, dy_mat.data(), nc * l, cols.data(),
               nc * l, T{1}, dw.data(), rows);
    // dcols = W^T * dY
    blas::gemm(true, false, rows, nc * l, out_c, T{1}, w.data(), rows, dy_mat.data(), nc * l,
               T{0}, dcols.data(), nc * l);
    col2im_batched_add(dcols.data(), nc, c, h, wd, g, oh, ow, dx.data() + n0 * c * h * wd);
    if (has_bias) {
      for (int64_t oc = 0; oc < out_c; ++oc) {
        T acc{};
        const T* row = dy_mat.data() + oc * nc * l;
        for (int64_t i = 0; i < nc * l; ++i) acc += row[i];
        db[oc] += acc;
      }
    }
  }
}

template <class T>
TensorT<T> dense_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& bias) {
  const int64_t n = x.dim(0), in = x.dim(1), out = w.dim(0);
  if (w.dim(1) != in)
    throw ShapeError("dense weight " + shape_str(w.shape()) + " does not match input " +
                     shape_str(x.shape()));
  TensorT<T> y({n, out});
  blas::gemm(false, true, n, out, in, T{1}, x.data(), in, w.data(), in, T{0}, y.data(), out);
  if (!bias.empty())
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < out; ++j) y.at2(i, j) += bias[j];
  return y;
}

std::vector<int64_t> with_batch(int64_t n, const std::vector<int64_t>& per_sample) {
  std::vector<int64_t> s;
  s.reserve(per_sample.size() + 1);
  s.push_back(n);
  s.insert(s.end(), per_sample.begin(), per_sample.end());
  return s;
}

}  // namespace

template <class T>
std::vector<int64_t> NetworkT<T>::act_shape(int64_t layer, int64_t n) const {
  std::vector<int64_t> cur = with_batch(n, input_shape);
  for (int64_t i = 0; i < static_cast<int64_t>(layers.size()) && i < layer; ++i) {
    const LayerSpec& l = layers[static_cast<size_t>(i)];
    switch (l.kind) {
      case LayerKind::Conv2d: {
        if (cur.size() != 4 || cur[1] != l.in_channels)
          throw ConfigError("layer " + l.name + ": expected [N," +
                            std::to_string(l.in_channels) + ",H,W], got " + shape_str(cur));
        cur = {cur[0], l.out_channels, l.geom.out_h(cur[2]), l.geom.out_w(cur[3])};
        break;
      }
      case LayerKind::Dense: {
        if (cur.size() != 2 || cur[1] != l.in_dim)
          throw ConfigError("layer " + l.name + ": expected [N," + std::to_string(l.in_dim) +
                            "], got " + shape_str(cur));
        cur = {cur[0], l.out_dim};
        break;
      }
      case LayerKind::Relu:
        break;
      case LayerKind::GlobalMaxPool: {
        if (cur.size() != 4) throw ConfigError("layer " + l.name + ": expected [N,C,H,W]");
        cur = {cur[0], cur[1]};
        break;
      }
      case LayerKind::MaxPool2d: {
        if (cur.size() != 4 || cur[2] % l.pool_k != 0 || cur[3] % l.pool_k != 0)
          throw ConfigError("layer " + l.name + ": pool window must tile input " +
                            shape_str(cur));
        cur = {cur[0], cur[1], cur[2] / l.pool_k, cur[3] / l.pool_k};
        break;
      }
      case LayerKind::Flatten: {
        int64_t d = 1;
        for (size_t j = 1; j < cur.size(); ++j) d *= cur[j];
        cur = {cur[0], d};
        break;
      }
    }
  }
  return cur;
}

template <class T>
int64_t NetworkT<T>::param_count() const {
  int64_t n = 0;
  for (const auto& p : params) n += p.weight.size() + p.bias.size();
  return n;
}

template <class T>
int64_t NetworkT<T>::num_classes() const {
  return act_shape(static_cast<int64_t>(layers.size()), 1).back();
}

template <class T>
void validate(const NetworkT<T>& net) {
  if (net.layers.size() != net.params.size())
    throw ConfigError("params not aligned with layers");
  net.act_shape(static_cast<int64_t>(net.layers.size()), 1);  // composes or throws
  for (size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& l = net.layers[i];
    const auto& p = net.params[i];
    if (l.has_weight()) {
      if (l.weight_rows() < 1 || l.weight_cols() < 1)
        throw ConfigError("layer " + l.name + ": degenerate weight matrix");
      if (p.weight.ndim() != 2 || p.weight.dim(0) != l.weight_rows() ||
          p.weight.dim(1) != l.weight_cols())
        throw ConfigError("layer " + l.name + ": weight tensor " + shape_str(p.weight.shape()) +
                          " does not match spec");
      if (l.has_bias && p.bias.size() != l.weight_rows())
        throw ConfigError("layer " + l.name + ": bias length mismatch");
      if (!l.has_bias && !p.bias.empty())
        throw ConfigError("layer " + l.name + ": unexpected bias");
    } else if (!p.weight.empty() || !p.bias.empty()) {
      throw ConfigError("layer " + l.name + ": parameters on a parameter-free layer");
    }
  }
  for (const int idx : net.constrained) {
    if (idx < 0 || idx >= static_cast<int>(net.layers.size()) ||
        !net.layers[static_cast<size_t>(idx)].has_weight())
      throw ConfigError("constrained registry entry does not name a weight matrix");
  }
}

template <class T>
void init_params(NetworkT<T>& net, uint64_t seed) {
  auto rng = make_rng(seed);
  net.params.assign(net.layers.size(), LayerParamsT<T>{});
  for (size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& l = net.layers[i];
    if (!l.has_weight()) continue;
    const int64_t rows = l.weight_rows(), cols = l.weight_cols();
    TensorT<T> w({rows, cols});
    const double bound = std::sqrt(1.0 / static_cast<double>(cols));
    for (int64_t j = 0; j < w.size(); ++j)
      w[j] = static_cast<T>(uniform_range(rng, -bound, bound));
    net.params[i].weight = std::move(w);
    if (l.has_bias) net.params[i].bias = TensorT<T>({rows});
  }
  validate(net);
}

template <class T>
TensorT<T> forward(const NetworkT<T>& net, const TensorT<T>& x, TraceT<T>* trace) {
  const std::vector<int64_t> expect = with_batch(x.dim(0), net.input_shape);
  if (x.shape() != expect)
    throw ShapeError("forward: input " + shape_str(x.shape()) + " does not match network input " +
                     shape_str(expect));
  const size_t depth = net.layers.size();
  if (trace) {
    trace->enabled = true;
    trace->acts.assign(depth + 1, TensorT<T>());
    trace->relu_mask.assign(depth, MaskTensor());
    trace->pool_argmax.assign(depth, IndexTensor());
  }
  TensorT<T> cur = x;
  for (size_t i = 0; i < depth; ++i) {
    const LayerSpec& l = net.layers[i];
    const auto& p = net.params[i];
    TensorT<T> next;
    switch (l.kind) {
      case LayerKind::Conv2d:
        next = conv_forward(cur, p.weight, p.bias, l.geom);
        break;
      case LayerKind::Dense:
        next = dense_forward(cur, p.weight, p.bias);
        break;
      case LayerKind::Relu: {
        next = TensorT<T>(cur.shape());
        MaskTensor mask(cur.shape());
        const T* src = cur.data();
        T* dst = next.data();
        uint8_t* m = mask.data();
        const int64_t sz = cur.size();
        for (int64_t j = 0; j < sz; ++j) {
          const bool on = src[j] > T{};
          dst[j] = on ? src[j] : T{};
          m[j] = on ? 1 : 0;
        }
        if (trace) trace->relu_mask[i] = std::move(mask);
        break;
      }
      case LayerKind::GlobalMaxPool: {
        auto r = global_max_pool(cur);
        next = std::move(r.y);
        if (trace) trace->pool_argmax[i] = std::move(r.argmax);
        break;
      }
      case LayerKind::MaxPool2d: {
        auto r = max_pool2d(cur, l.pool_k);
        next = std::move(r.y);
        if (trace) trace->pool_argmax[i] = std::move(r.argmax);
        break;
      }
      case LayerKind::Flatten: {
        int64_t d = 1;
        for (int64_t j = 1; j < cur.ndim(); ++j) d *= cur.dim(j);
        next = cur.reshaped({cur.dim(0), d});
        break;
      }
    }
    if (trace)
      trace->acts[i] = std::move(cur);
    cur = std::move(next);
  }
  if (trace) trace->acts[depth] = cur;
  return cur;
}

template <class T>
GradientsT<T> backward(const NetworkT<T>& net, const TraceT<T>& trace, const TensorT<T>& dlogits) {
  if (!trace.enabled || trace.acts.size() != net.layers.size() + 1)
    throw Error("backward requires a trace from the same forward pass");
  GradientsT<T> g;
  g.params.assign(net.layers.size(), LayerParamsT<T>{});
  TensorT<T> cur = dlogits;
  for (int64_t i = static_cast<int64_t>(net.layers.size()) - 1; i >= 0; --i) {
    const LayerSpec& l = net.layers[static_cast<size_t>(i)];
    const auto& p = net.params[static_cast<size_t>(i)];
    const TensorT<T>& in = trace.acts[static_cast<size_t>(i)];
    switch (l.kind) {
      case LayerKind::Conv2d: {
        TensorT<T> dx, dw, db;
        conv_backward(in, p.weight, cur, l.geom, l.has_bias, dx, dw, db);
        g.params[static_cast<size_t>(i)] = {std::move(dw), std::move(db)};
        cur = std::move(dx);
        break;
      }
      case LayerKind::Dense: {
        const int64_t n = in.dim(0);
        TensorT<T> dw({l.out_dim, l.in_dim});
        blas::gemm(true, false, l.out_dim, l.in_dim, n, T{1}, cur.data(), l.out_dim, in.data(),
                   l.in_dim, T{0}, dw.data(), l.in_dim);
        TensorT<T> db;
        if (l.has_bias) {
          db = TensorT<T>({l.out_dim});
          for (int64_t r = 0; r < n; ++r)
            for (int64_t j = 0; j < l.out_dim; ++j) db[j] += cur.at2(r, j);
        }
        TensorT<T> dx({n, l.in_dim});
        blas::gemm(false, false, n, l.in_dim, l.out_dim, T{1}, cur.data(), l.out_dim,
                   p.weight.data(), l.in_dim, T{0}, dx.data(), l.in_dim);
        g.params[static_cast<size_t>(i)] = {std::move(dw), std::move(db)};
        cur = std::move(dx);
        break;
      }
      case LayerKind::Relu: {
        const MaskTensor& m = trace.relu_mask[static_cast<size_t>(i)];
        T* d = cur.data();
        const uint8_t* pm = m.data();
        const int64_t sz = cur.size();
        for (int64_t j = 0; j < sz; ++j)
          if (!pm[j]) d[j] = T{};
        break;
      }
      case LayerKind::GlobalMaxPool: {
        const IndexTensor& arg = trace.pool_argmax[static_cast<size_t>(i)];
        TensorT<T> dx(in.shape());
        const int64_t hw = in.dim(2) * in.dim(3);
        const int64_t nc = in.dim(0) * in.dim(1);
        for (int64_t j = 0; j < nc; ++j) dx[j * hw + arg[j]] = cur[j];
        cur = std::move(dx);
        break;
      }
      case LayerKind::MaxPool2d: {
        const IndexTensor& arg = trace.pool_argmax[static_cast<size_t>(i)];
        TensorT<T> dx(in.shape());
        const int64_t hw = in.dim(2) * in.dim(3);
        const int64_t ohw = arg.dim(2) * arg.dim(3);
        const int64_t nc = in.dim(0) * in.dim(1);
        for (int64_t j = 0; j < nc; ++j) {
          T* plane = dx.data() + j * hw;
          for (int64_t q = 0; q < ohw; ++q) plane[arg[j * ohw + q]] += cur[j * ohw + q];
        }
        cur = std::move(dx);
        break;
      }
      case LayerKind::Flatten:
        cur = std::move(cur).reshaped(in.shape());
        break;
    }
  }
  g.input = std::move(cur);
  return g;
}

template <class T>
TensorT<T> softmax(const TensorT<T>& logits) {
  const int64_t n = logits.dim(0), k = logits.dim(1);
  TensorT<T> p(logits.shape());
  for (int64_t i = 0; i < n; ++i) {
    const T* row = logits.data() + i * k;
    T* out = p.data() + i * k;
    T m = row[0];
    for (int64_t j = 1; j < k; ++j) m = std::max(m, row[j]);
    T denom{};
    for (int64_t j = 0; j < k; ++j) {
      out[j] = std::exp(row[j] - m);
      denom += out[j];
    }
    for (int64_t j = 0; j < k; ++j) out[j] /= denom;
  }
  return p;
}

template <class T>
LossResult<T> softmax_cross_entropy(const TensorT<T>& logits, const IndexTensor& labels) {
  if (logits.ndim() != 2 || labels.ndim() != 1 || labels.dim(0) != logits.dim(0))
    throw ShapeError("softmax_cross_entropy: logits [N,K] and labels [N] required");
  const int64_t n = logits.dim(0), k = logits.dim(1);
  for (int64_t i = 0; i < n; ++i)
    if (labels[i] < 0 || labels[i] >= k)
      throw ConfigError("label " + std::to_string(labels[i]) + " out of range [0," +
                        std::to_string(k) + ")");
  LossResult<T> r;
  r.dlogits = softmax(logits);
  double loss = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const T* row = logits.data() + i * k;
    T m = row[0];
    for (int64_t j = 1; j < k; ++j) m = std::max(m, row[j]);
    double denom = 0.0;
    for (int64_t j = 0; j < k; ++j) denom += std::exp(static_cast<double>(row[j] - m));
    loss -= static_cast<double>(row[labels[i]] - m) - std::log(denom);
  }
  r.loss = loss / static_cast<double>(n);
  const T inv_n = T{1} / static_cast<T>(n);
  for (int64_t i = 0; i < n; ++i) {
    T* row = r.dlogits.data() + i * k;
    row[labels[i]] -= T{1};
    for (int64_t j = 0; j < k; ++j) row[j] *= inv_n;
  }
  return r;
}

IndexTensor predict(const Tensor& logits) {
  const int64_t n = logits.dim(0), k = logits.dim(1);
  IndexTensor out({n});
  for (int64_t i = 0; i < n; ++i) {
    const float* row = logits.data() + i * k;
    int64_t arg = 0;
    for (int64_t j = 1; j < k; ++j)
      if (row[j] > row[arg]) arg = j;
    out[i] = arg;
  }
  return out;
}

double accuracy(const Tensor& logits, const IndexTensor& labels) {
  const IndexTensor pred = predict(logits);
  int64_t hit = 0;
  for (int64_t i = 0; i < pred.size(); ++i)
    if (pred[i] == labels[i]) ++hit;
  return pred.size() ? static_cast<double>(hit) / static_cast<double>(pred.size()) : 0.0;
}

Network build_acnn_small(AcnnVariant variant) {
  Network net;
  const bool mnist = variant == AcnnVariant::Mnist;
  net.arch = mnist ? "acnn_small_mnist" : "acnn_small_cifar10";
  net.input_shape = mnist ? std::vector<int64_t>{1, 28, 28} : std::vector<int64_t>{3, 32, 32};
  const int64_t c0 = mnist ? 1 : 3;
  const int64_t c1 = mnist ? 8 : 24;
  const int64_t c2 = mnist ? 24 : 64;
  const int64_t c3 = mnist ? 288 : 512;
  const int64_t c4 = mnist ? 864 : 1536;
  const int64_t c5 = mnist ? 2592 : 4608;
  net.layers = {
      LayerSpec::conv2d("conv1", c0, c1, 5, 1, 1),
      LayerSpec::relu("relu1"),
      LayerSpec::conv2d("conv2", c1, c2, 2, 2, 0),
      LayerSpec::conv2d("conv3", c2, c3, 4, 1, 1),
      LayerSpec::relu("relu3"),
      LayerSpec::conv2d("conv4", c3, c4, 2, 2, 0),
      LayerSpec::conv2d("conv5", c4, c5, 3, 1, 1),
      LayerSpec::relu("relu5"),
      LayerSpec::global_max_pool("pool"),
      LayerSpec::dense("fc", c5, 10),
  };
  net.constrained = {0, 2, 3, 5, 6, 9};
  init_params(net, 0);
  return net;
}

Network build_lenet_like() {
  Network net;
  net.arch = "lenet";
  net.input_shape = {1, 28, 28};
  net.layers = {
      LayerSpec::conv2d("conv1", 1, 6, 5, 1, 0),
      LayerSpec::relu("relu1"),
      LayerSpec::max_pool2d("pool1", 2),
      LayerSpec::conv2d("conv2", 6, 16, 5, 1, 0),
      LayerSpec::relu("relu2"),
      LayerSpec::max_pool2d("pool2", 2),
      LayerSpec::flatten("flatten"),
      LayerSpec::dense("fc1", 256, 120),
      LayerSpec::relu("relu3"),
      LayerSpec::dense("fc2", 120, 84),
      LayerSpec::relu("relu4"),
      LayerSpec::dense("fc3", 84, 10),
  };
  net.constrained = {0, 3, 7, 9, 11};
  init_params(net, 0);
  return net;
}

Network build_mlp(std::vector<int64_t> input_shape, const std::vector<int64_t>& dims) {
  Network net;
  net.arch = "mlp";
  net.input_shape = std::move(input_shape);
  int64_t in = 1;
  for (const int64_t d : net.input_shape) in *= d;
  if (net.input_shape.size() > 1) net.layers.push_back(LayerSpec::flatten("flatten"));
  for (size_t i = 0; i < dims.size(); ++i) {
    net.layers.push_back(
        LayerSpec::dense("fc" + std::to_string(i + 1), in, dims[i]));
    net.constrained.push_back(static_cast<int>(net.layers.size()) - 1);
    in = dims[i];
    if (i + 1 < dims.size())
      net.layers.push_back(LayerSpec::relu("relu" + std::to_string(i + 1)));
  }
  init_params(net, 0);
  return net;
}

#define BORT_INSTANTIATE(T)                                                             \
  template struct NetworkT<T>;                                                          \
  template void validate<T>(const NetworkT<T>&);                                        \
  template void init_params<T>(NetworkT<T>&, uint64_t);                                 \
  template TensorT<T> forward<T>(const NetworkT<T>&, const TensorT<T>&, TraceT<T>*);    \
  template GradientsT<T> backward<T>(const NetworkT<T>&, const TraceT<T>&,              \
                                     const TensorT<T>&);                                \
  template TensorT<T> softmax<T>(const TensorT<T>&);                                    \
  template LossResult<T> softmax_cross_entropy<T>(const TensorT<T>&, const IndexTensor&);

BORT_INSTANTIATE(float)
BORT_INSTANTIATE(double)
#undef BORT_INSTANTIATE

}  // namespace bort
