#include "bort/diagnostics.hpp"

#include <cmath>

#include "bort/gemm.hpp"
#include "bort/rng.hpp"
#include "bort/svd.hpp"

namespace bort {

namespace {

int bucket_of(double v, double lo, double hi) {
  const double t = (v - lo) / (hi - lo) * kGramHistBuckets;
  const int b = static_cast<int>(std::floor(t));
  return std::clamp(b, 0, kGramHistBuckets - 1);
}

}  // namespace

GramStats gram_stats(const Tensor& w, const std::string& name) {
  if (w.ndim() != 2) throw ShapeError("gram_stats expects a weight matrix");
  const int64_t r = w.dim(0), c = w.dim(1);
  GramStats st;
  st.layer = name;
  st.rows = r;
  st.cols = c;
  st.diag_hist.assign(kGramHistBuckets, 0);
  st.offdiag_hist.assign(kGramHistBuckets, 0);

  Tensor64 wd = w.cast<double>();
  for (int64_t i = 0; i < r; ++i) {
    double acc = 0.0;
    for (int64_t j = 0; j < c; ++j) acc += wd.at2(i, j) * wd.at2(i, j);
    st.max_row_norm = std::max(st.max_row_norm, std::sqrt(acc));
  }

  // Stream G = W^T W in row blocks to keep memory flat for wide conv views.
  const int64_t bsz = std::clamp<int64_t>((64ll << 20) / (8 * std::max<int64_t>(c, 1)), 1, c);
  std::vector<double> slice(static_cast<size_t>(bsz * r));
  std::vector<double> block(static_cast<size_t>(bsz * c));
  double diag_sum = 0.0, diag_sq = 0.0, off_sum = 0.0, off_sq = 0.0, resid_sq = 0.0;
  for (int64_t a = 0; a < c; a += bsz) {
    const int64_t nb = std::min(bsz, c - a);
    // slice = W[:, a:a+nb] packed as [r, nb]
    for (int64_t i = 0; i < r; ++i)
      for (int64_t j = 0; j < nb; ++j) slice[static_cast<size_t>(i * nb + j)] = wd.at2(i, a + j);
    blas::gemm(true, false, nb, c, r, 1.0, slice.data(), nb, wd.data(), c, 0.0, block.data(), c);
    for (int64_t i = 0; i < nb; ++i) {
      const int64_t gi = a + i;
      const double* row = block.data() + i * c;
      for (int64_t j = 0; j < c; ++j) {
        const double v = row[j];
        if (gi == j) {
          diag_sum += v;
          diag_sq += v * v;
          st.diag_hist[static_cast<size_t>(bucket_of(v, kGramDiagLo, kGramDiagHi))] += 1;
          resid_sq += (v - 1.0) * (v - 1.0);
        } else {
          off_sum += v;
          off_sq += v * v;
          st.offdiag_hist[static_cast<size_t>(bucket_of(v, kGramOffdiagLo, kGramOffdiagHi))] += 1;
          resid_sq += v * v;
        }
      }
    }
  }
  const double nd = static_cast<double>(c);
  const double no = static_cast<double>(c) * static_cast<double>(c - 1);
  st.diag_mean = diag_sum / nd;
  st.diag_std = std::sqrt(std::max(0.0, diag_sq / nd - st.diag_mean * st.diag_mean));
  if (no > 0) {
    st.offdiag_mean = off_sum / no;
    st.offdiag_std = std::sqrt(std::max(0.0, off_sq / no - st.offdiag_mean * st.offdiag_mean));
  }
  st.frobenius_residual = std::sqrt(resid_sq);
  return st;
}

BoundednessReport boundedness_check(const Tensor& w, double c_w) {
  if (w.ndim() != 2) throw ShapeError("boundedness_check expects a weight matrix");
  if (!(c_w > 0.0)) throw ConfigError("boundedness_check: bound must be positive");
  BoundednessReport rep;
  rep.c_w = c_w;
  rep.rows = w.dim(0);
  for (int64_t i = 0; i < w.dim(0); ++i) {
    double acc = 0.0;
    for (int64_t j = 0; j < w.dim(1); ++j)
      acc += static_cast<double>(w.at2(i, j)) * static_cast<double>(w.at2(i, j));
    const double norm = std::sqrt(acc);
    rep.row_norm_sq_sum += acc;
    rep.max_row_norm = std::max(rep.max_row_norm, norm);
    if (norm > c_w) ++rep.violations;
  }
  return rep;
}

CapacityReport verify_capacity_equivalence(const Tensor64& v0, const Tensor64& w0, int probes,
                                           uint64_t seed, double out_tol, double orth_tol) {
  if (w0.ndim() != 2 || v0.ndim() != 1 || v0.dim(0) != w0.dim(0))
    throw ShapeError("verify_capacity_equivalence expects v0 [m], w0 [m,n]");
  const int64_t m = w0.dim(0), n = w0.dim(1);
  const SvdResult svd = jacobi_svd(w0);

  // W1 = V^T, v1 = Sigma^T U^T v0.
  Tensor64 w1({n, n});
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < n; ++j) w1.at2(i, j) = svd.v.at2(j, i);
  Tensor64 v1({n});
  for (int64_t j = 0; j < std::min(m, n); ++j) {
    double acc = 0.0;
    for (int64_t i = 0; i < m; ++i) acc += svd.u.at2(i, j) * v0[i];
    v1[j] = svd.s[j] * acc;
  }

  CapacityReport rep;
  double resid = 0.0;
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < n; ++j) {
      double g = 0.0;
      for (int64_t k = 0; k < n; ++k) g += w1.at2(k, i) * w1.at2(k, j);
      const double d = g - (i == j ? 1.0 : 0.0);
      resid += d * d;
    }
  rep.w1_orth_residual = std::sqrt(resid);

  auto rng = make_rng(seed);
  for (int p = 0; p < probes; ++p) {
    Tensor64 x({n});
    for (int64_t i = 0; i < n; ++i) x[i] = uniform_range(rng, -1.0, 1.0);
    double y0 = 0.0;
    for (int64_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (int64_t j = 0; j < n; ++j) acc += w0.at2(i, j) * x[j];
      y0 += v0[i] * acc;
    }
    double y1 = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int64_t j = 0; j < n; ++j) acc += w1.at2(i, j) * x[j];
      y1 += v1[i] * acc;
    }
    rep.max_discrepancy = std::max(rep.max_discrepancy, std::abs(y0 - y1));
  }
  rep.pass = rep.max_discrepancy < out_tol && rep.w1_orth_residual < orth_tol;
  return rep;
}

}  // namespace bort
