#include "bort/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bort {

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kPairTol = 1e-15;

// One-sided Jacobi on a tall-or-square matrix: returns B with orthogonal
// columns and the accumulated right rotations, so that input = B * V^T.
void orthogonalize_columns(Tensor64& b, Tensor64& v) {
  const int64_t m = b.dim(0), n = b.dim(1);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (int64_t p = 0; p < n - 1; ++p) {
      for (int64_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (int64_t i = 0; i < m; ++i) {
          const double bp = b.at2(i, p), bq = b.at2(i, q);
          alpha += bp * bp;
          beta += bq * bq;
          gamma += bp * bq;
        }
        if (std::abs(gamma) <= kPairTol * std::sqrt(alpha * beta) || gamma == 0.0) continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int64_t i = 0; i < m; ++i) {
          const double bp = b.at2(i, p), bq = b.at2(i, q);
          b.at2(i, p) = c * bp - s * bq;
          b.at2(i, q) = s * bp + c * bq;
        }
        for (int64_t i = 0; i < n; ++i) {
          const double vp = v.at2(i, p), vq = v.at2(i, q);
          v.at2(i, p) = c * vp - s * vq;
          v.at2(i, q) = s * vp + c * vq;
        }
        rotated = true;
      }
    }
    if (!rotated) return;
  }
  throw NumericError("jacobi_svd: column rotations did not converge");
}

Tensor64 identity(int64_t n) {
  Tensor64 id({n, n});
  for (int64_t i = 0; i < n; ++i) id.at2(i, i) = 1.0;
  return id;
}

// Fill null columns of u (marked in `missing`) with an orthonormal completion.
void complete_basis(Tensor64& u, const std::vector<int64_t>& missing) {
  const int64_t m = u.dim(0);
  int64_t candidate = 0;
  for (const int64_t col : missing) {
    for (; candidate <= m; ++candidate) {
      if (candidate == m) throw NumericError("jacobi_svd: basis completion failed");
      std::vector<double> vec(static_cast<size_t>(m), 0.0);
      vec[static_cast<size_t>(candidate)] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (int64_t j = 0; j < u.dim(1); ++j) {
          if (j == col) continue;
          bool pending = std::find(missing.begin(), missing.end(), j) != missing.end() && j > col;
          if (pending) continue;
          double proj = 0.0;
          for (int64_t i = 0; i < m; ++i) proj += u.at2(i, j) * vec[static_cast<size_t>(i)];
          for (int64_t i = 0; i < m; ++i) vec[static_cast<size_t>(i)] -= proj * u.at2(i, j);
        }
      }
      double nrm = 0.0;
      for (const double x : vec) nrm += x * x;
      nrm = std::sqrt(nrm);
      if (nrm > 1e-3) {
        for (int64_t i = 0; i < m; ++i) u.at2(i, col) = vec[static_cast<size_t>(i)] / nrm;
        ++candidate;
        break;
      }
    }
  }
}

}  // namespace

SvdResult jacobi_svd(const Tensor64& w) {
  if (w.ndim() != 2) throw ShapeError("jacobi_svd expects a matrix");
  const int64_t m = w.dim(0), n = w.dim(1);
  if (m < 1 || n < 1) throw ShapeError("jacobi_svd: empty matrix");
  if (m > 64 || n > 64) throw ConfigError("jacobi_svd is restricted to m,n <= 64");

  if (m < n) {
    // Factor the transpose and swap the roles of U and V.
    Tensor64 wt({n, m});
    for (int64_t i = 0; i < m; ++i)
      for (int64_t j = 0; j < n; ++j) wt.at2(j, i) = w.at2(i, j);
    SvdResult r = jacobi_svd(wt);
    return SvdResult{std::move(r.v), std::move(r.s), std::move(r.u)};
  }

  Tensor64 b = w;
  Tensor64 v = identity(n);
  orthogonalize_columns(b, v);

  std::vector<double> sigma(static_cast<size_t>(n));
  for (int64_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int64_t i = 0; i < m; ++i) acc += b.at2(i, j) * b.at2(i, j);
    sigma[static_cast<size_t>(j)] = std::sqrt(acc);
  }

  std::vector<int64_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t c) {
    return sigma[static_cast<size_t>(a)] > sigma[static_cast<size_t>(c)];
  });

  const double smax = sigma[static_cast<size_t>(order[0])];
  const double null_tol = static_cast<double>(std::max(m, n)) * 1e-14 * std::max(smax, 1e-300);

  SvdResult out{Tensor64({m, m}), Tensor64({n}), Tensor64({n, n})};
  std::vector<int64_t> missing;
  for (int64_t jj = 0; jj < n; ++jj) {
    const int64_t src = order[static_cast<size_t>(jj)];
    const double s = sigma[static_cast<size_t>(src)];
    out.s[jj] = s;
    for (int64_t i = 0; i < n; ++i) out.v.at2(i, jj) = v.at2(i, src);
    if (s > null_tol) {
      for (int64_t i = 0; i < m; ++i) out.u.at2(i, jj) = b.at2(i, src) / s;
    } else {
      missing.push_back(jj);
    }
  }
  for (int64_t jj = n; jj < m; ++jj) missing.push_back(jj);
  if (!missing.empty()) complete_basis(out.u, missing);
  return out;
}

}  // namespace bort
