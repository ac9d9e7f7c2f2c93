#include "bort/gradcheck.hpp"

#include <cmath>

namespace bort {

Tensor64 finite_diff_grad(const std::function<double(const Tensor64&)>& f, const Tensor64& x,
                          double h) {
  if (!(h > 0.0)) throw ConfigError("finite_diff_grad: step must be positive");
  Tensor64 probe = x;
  Tensor64 grad(x.shape());
  const int64_t n = x.size();
  for (int64_t i = 0; i < n; ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double fp = f(probe);
    probe[i] = saved - h;
    const double fm = f(probe);
    probe[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericError("finite_diff_grad: objective not finite at probe point");
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double relative_error(const Tensor64& a, const Tensor64& b) {
  if (!a.same_shape(b)) throw ShapeError("relative_error: shape mismatch");
  double scale = 1.0;
  for (int64_t i = 0; i < b.size(); ++i) scale = std::max(scale, std::abs(b[i]));
  double worst = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  return worst;
}

}  // namespace bort
