#include "bort/optimizer.hpp"

#include <cmath>
#include <sstream>

#include "bort/gemm.hpp"

namespace bort {

const char* base_kind_name(BaseKind k) {
  switch (k) {
    case BaseKind::Sgd: return "sgd";
    case BaseKind::SgdMomentum: return "sgd_momentum";
    case BaseKind::AdamW: return "adamw";
  }
  return "?";
}

BaseKind base_kind_from_name(const std::string& s) {
  if (s == "sgd") return BaseKind::Sgd;
  if (s == "sgd_momentum") return BaseKind::SgdMomentum;
  if (s == "adamw") return BaseKind::AdamW;
  throw ConfigError("unknown optimizer: " + s);
}

namespace {

// Frobenius statistics of W^T W through the smaller Gram side:
// ||W^T W - I||_F^2 = ||G||_F^2 - 2 ||W||_F^2 + cols, and ||W^T W||_F =
// ||W W^T||_F (both trace(G^2)).
template <class T>
double orth_residual_sq(const TensorT<T>& w) {
  const int64_t r = w.dim(0), c = w.dim(1);
  const int64_t s = std::min(r, c);
  TensorT<T> gram({s, s});
  if (r <= c)
    blas::gemm(false, true, r, r, c, T{1}, w.data(), c, w.data(), c, T{0}, gram.data(), r);
  else
    blas::gemm(true, false, c, c, r, T{1}, w.data(), c, w.data(), c, T{0}, gram.data(), c);
  double gram_sq = 0.0;
  for (int64_t i = 0; i < gram.size(); ++i)
    gram_sq += static_cast<double>(gram[i]) * static_cast<double>(gram[i]);
  double w_sq = 0.0;
  for (int64_t i = 0; i < w.size(); ++i)
    w_sq += static_cast<double>(w[i]) * static_cast<double>(w[i]);
  const double v = gram_sq - 2.0 * w_sq + static_cast<double>(c);
  return v < 0.0 ? 0.0 : v;
}

/// (W W^T W - W), associating through the smaller Gram matrix.
template <class T>
TensorT<T> penalty_direction(const TensorT<T>& w) {
  const int64_t r = w.dim(0), c = w.dim(1);
  TensorT<T> out({r, c});
  if (r <= c) {
    TensorT<T> g({r, r});
    blas::gemm(false, true, r, r, c, T{1}, w.data(), c, w.data(), c, T{0}, g.data(), r);
    blas::gemm(false, false, r, c, r, T{1}, g.data(), r, w.data(), c, T{0}, out.data(), c);
  } else {
    TensorT<T> g({c, c});
    blas::gemm(true, false, c, c, r, T{1}, w.data(), c, w.data(), c, T{0}, g.data(), c);
    blas::gemm(false, false, r, c, c, T{1}, w.data(), c, g.data(), c, T{0}, out.data(), c);
  }
  sub_inplace(out, w);
  return out;
}

template <class T>
void sgd_update(TensorT<T>& p, const TensorT<T>& g, double lr, double wd) {
  T* w = p.data();
  const T* gp = g.data();
  const T flr = static_cast<T>(lr);
  const T fwd = static_cast<T>(wd);
  const int64_t n = p.size();
  if (wd != 0.0) {
    for (int64_t i = 0; i < n; ++i) w[i] -= flr * (gp[i] + fwd * w[i]);
  } else {
    for (int64_t i = 0; i < n; ++i) w[i] -= flr * gp[i];
  }
}

template <class T>
void momentum_update(TensorT<T>& p, const TensorT<T>& g, TensorT<T>& vel, double lr, double wd,
                     double mu) {
  T* w = p.data();
  const T* gp = g.data();
  T* v = vel.data();
  const T flr = static_cast<T>(lr);
  const T fwd = static_cast<T>(wd);
  const T fmu = static_cast<T>(mu);
  const int64_t n = p.size();
  for (int64_t i = 0; i < n; ++i) {
    const T grad = gp[i] + fwd * w[i];
    v[i] = fmu * v[i] + grad;
    w[i] -= flr * v[i];
  }
}

template <class T>
void adamw_update(TensorT<T>& p, const TensorT<T>& g, TensorT<T>& m1, TensorT<T>& m2, double lr,
                  double wd, double b1, double b2, double eps, int64_t t) {
  T* w = p.data();
  const T* gp = g.data();
  T* m = m1.data();
  T* v = m2.data();
  const T fb1 = static_cast<T>(b1), fb2 = static_cast<T>(b2);
  const T corr1 = static_cast<T>(1.0 / (1.0 - std::pow(b1, static_cast<double>(t))));
  const T corr2 = static_cast<T>(1.0 / (1.0 - std::pow(b2, static_cast<double>(t))));
  const T flr = static_cast<T>(lr), feps = static_cast<T>(eps), fwd = static_cast<T>(wd);
  const int64_t n = p.size();
  for (int64_t i = 0; i < n; ++i) {
    m[i] = fb1 * m[i] + (T{1} - fb1) * gp[i];
    v[i] = fb2 * v[i] + (T{1} - fb2) * gp[i] * gp[i];
    const T mhat = m[i] * corr1;
    const T vhat = v[i] * corr2;
    w[i] -= flr * mhat / (std::sqrt(vhat) + feps);
    if (fwd != T{}) w[i] -= flr * fwd * w[i];
  }
}

}  // namespace

template <class T>
OptimizerStateT<T> OptimizerStateT<T>::make(const NetworkT<T>& net, const BortConfig& cfg) {
  OptimizerStateT<T> s;
  const bool needs_m1 = cfg.base != BaseKind::Sgd;
  const bool needs_m2 = cfg.base == BaseKind::AdamW;
  s.m1.assign(net.params.size(), LayerParamsT<T>{});
  s.m2.assign(net.params.size(), LayerParamsT<T>{});
  for (size_t i = 0; i < net.params.size(); ++i) {
    const auto& p = net.params[i];
    if (needs_m1) {
      if (!p.weight.empty()) s.m1[i].weight = TensorT<T>(p.weight.shape());
      if (!p.bias.empty()) s.m1[i].bias = TensorT<T>(p.bias.shape());
    }
    if (needs_m2) {
      if (!p.weight.empty()) s.m2[i].weight = TensorT<T>(p.weight.shape());
      if (!p.bias.empty()) s.m2[i].bias = TensorT<T>(p.bias.shape());
    }
  }
  return s;
}

template <class T>
double bort_penalty(const TensorT<T>& w, double lambda) {
  if (lambda < 0.0) throw ConfigError("penalty coefficient must be >= 0");
  if (w.ndim() != 2) throw ShapeError("bort_penalty expects a weight matrix");
  return lambda * orth_residual_sq(w);
}

template <class T>
TensorT<T> bort_penalty_grad(const TensorT<T>& w, double lambda) {
  if (lambda < 0.0) throw ConfigError("penalty coefficient must be >= 0");
  if (w.ndim() != 2) throw ShapeError("bort_penalty_grad expects a weight matrix");
  TensorT<T> dir = penalty_direction(w);
  scale_inplace(dir, static_cast<T>(lambda));
  return dir;
}

template <class T>
double orth_residual(const TensorT<T>& w) {
  return std::sqrt(orth_residual_sq(w));
}

template <class T>
void step(NetworkT<T>& net, const GradientsT<T>& grads, OptimizerStateT<T>& state,
          const BortConfig& cfg) {
  if (grads.params.size() != net.params.size())
    throw ShapeError("gradients not aligned with network parameters");
  state.step_count += 1;
  const bool penalty_on = cfg.lambda != 0.0;
  std::vector<bool> constrained(net.params.size(), false);
  for (const int i : net.constrained) constrained[static_cast<size_t>(i)] = true;

  for (size_t i = 0; i < net.params.size(); ++i) {
    auto& p = net.params[i];
    if (p.weight.empty()) continue;
    const auto& g = grads.params[i];

    TensorT<T> bort_dir;
    TensorT<T> task_grad_storage;
    const TensorT<T>* task_grad = &g.weight;
    if (penalty_on && constrained[i]) {
      if (cfg.coupled_penalty) {
        task_grad_storage = g.weight;
        TensorT<T> dir = penalty_direction(p.weight);
        axpy_inplace(task_grad_storage, static_cast<T>(cfg.lambda), dir);
        task_grad = &task_grad_storage;
      } else {
        bort_dir = penalty_direction(p.weight);
      }
    }

    switch (cfg.base) {
      case BaseKind::Sgd:
        sgd_update(p.weight, *task_grad, cfg.lr, cfg.weight_decay);
        if (!g.bias.empty()) sgd_update(p.bias, g.bias, cfg.lr, cfg.weight_decay);
        break;
      case BaseKind::SgdMomentum:
        momentum_update(p.weight, *task_grad, state.m1[i].weight, cfg.lr, cfg.weight_decay,
                        cfg.momentum);
        if (!g.bias.empty())
          momentum_update(p.bias, g.bias, state.m1[i].bias, cfg.lr, cfg.weight_decay,
                          cfg.momentum);
        break;
      case BaseKind::AdamW:
        adamw_update(p.weight, *task_grad, state.m1[i].weight, state.m2[i].weight, cfg.lr,
                     cfg.weight_decay, cfg.beta1, cfg.beta2, cfg.eps, state.step_count);
        if (!g.bias.empty())
          adamw_update(p.bias, g.bias, state.m1[i].bias, state.m2[i].bias, cfg.lr,
                       cfg.weight_decay, cfg.beta1, cfg.beta2, cfg.eps, state.step_count);
        break;
    }

    if (!bort_dir.empty())
      axpy_inplace(p.weight, static_cast<T>(-cfg.lr * cfg.lambda), bort_dir);
  }
}

double evaluate(const Network& net, const Dataset& ds, int64_t batch_size) {
  if (ds.size() == 0) return std::nan("");
  int64_t hit = 0;
  std::vector<int64_t> idx(static_cast<size_t>(batch_size));
  for (int64_t n0 = 0; n0 < ds.size(); n0 += batch_size) {
    const int64_t nc = std::min(batch_size, ds.size() - n0);
    idx.resize(static_cast<size_t>(nc));
    for (int64_t i = 0; i < nc; ++i) idx[static_cast<size_t>(i)] = n0 + i;
    auto [x, y] = gather_batch(ds, idx);
    const Tensor logits = forward(net, x);
    const IndexTensor pred = predict(logits);
    for (int64_t i = 0; i < nc; ++i)
      if (pred[i] == y[i]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(ds.size());
}

namespace {

std::string weight_norm_snapshot(const Network& net, double loss) {
  std::ostringstream os;
  os << "loss=" << loss << "\n";
  for (size_t i = 0; i < net.layers.size(); ++i) {
    if (!net.layers[i].has_weight()) continue;
    const Tensor& w = net.params[i].weight;
    os << net.layers[i].name << " |W|_F=" << norm2(w) << " max|w|=" << max_abs(w)
       << " orth_resid=" << orth_residual(w) << "\n";
  }
  return os.str();
}

}  // namespace

TrainingReport train(Network& net, const Dataset& train_ds, const Dataset& test_ds,
                     const BortConfig& cfg, const TrainSinks& sinks) {
  if (train_ds.size() == 0) throw ConfigError("train: empty dataset");
  if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (cfg.lr <= 0.0) throw ConfigError("train: learning rate must be positive");
  if (cfg.lambda < 0.0 || cfg.weight_decay < 0.0)
    throw ConfigError("train: negative coefficient");
  validate(net);

  OptimizerState state = OptimizerState::make(net, cfg);
  TrainingReport report;
  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches = batch_iter(train_ds.size(), cfg.batch_size, cfg.seed, epoch);
    double loss_sum = 0.0;
    int64_t hit = 0, seen = 0;
    for (const auto& batch : batches) {
      auto [x, y] = gather_batch(train_ds, batch);
      TraceT<float> trace;
      const Tensor logits = forward(net, x, &trace);
      auto loss = softmax_cross_entropy(logits, y);
      if (!std::isfinite(loss.loss)) {
        const std::string snapshot = weight_norm_snapshot(net, loss.loss);
        if (sinks.on_divergence) sinks.on_divergence(snapshot);
        if (sinks.on_checkpoint) sinks.on_checkpoint(net, epoch, false, true);
        throw DivergenceError("training loss is not finite at epoch " + std::to_string(epoch) +
                              " step " + std::to_string(report.steps) + "\n" + snapshot);
      }
      const IndexTensor pred = predict(logits);
      for (int64_t i = 0; i < y.size(); ++i)
        if (pred[i] == y[i]) ++hit;
      seen += y.size();
      loss_sum += loss.loss * static_cast<double>(y.size());

      GradientsT<float> grads = backward(net, trace, loss.dlogits);
      step(net, grads, state, cfg);
      report.steps += 1;
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(seen);
    m.train_acc = static_cast<double>(hit) / static_cast<double>(seen);
    m.test_acc = evaluate(net, test_ds, cfg.batch_size);
    for (const int li : net.constrained)
      m.orth_resid.emplace_back(net.layers[static_cast<size_t>(li)].name,
                                orth_residual(net.params[static_cast<size_t>(li)].weight));
    report.history.push_back(m);
    report.epochs_run = epoch + 1;
    report.final_train_loss = m.train_loss;
    report.final_train_acc = m.train_acc;
    report.final_test_acc = m.test_acc;
    const bool is_best = std::isfinite(m.test_acc) && m.test_acc > report.best_test_acc;
    if (is_best) {
      report.best_test_acc = m.test_acc;
      report.best_epoch = epoch;
    }
    if (sinks.on_epoch) sinks.on_epoch(m);
    if (sinks.on_checkpoint)
      sinks.on_checkpoint(net, epoch, is_best, epoch + 1 == cfg.epochs);
  }
  return report;
}

#define BORT_INSTANTIATE(T)                                                            \
  template struct OptimizerStateT<T>;                                                  \
  template double bort_penalty<T>(const TensorT<T>&, double);                          \
  template TensorT<T> bort_penalty_grad<T>(const TensorT<T>&, double);                 \
  template double orth_residual<T>(const TensorT<T>&);                                 \
  template void step<T>(NetworkT<T>&, const GradientsT<T>&, OptimizerStateT<T>&,       \
                        const BortConfig&);

BORT_INSTANTIATE(float)
BORT_INSTANTIATE(double)
#undef BORT_INSTANTIATE

}  // namespace bort
