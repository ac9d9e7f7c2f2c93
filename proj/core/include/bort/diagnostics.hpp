#pragma once

#include <string>
#include <vector>

#include "bort/tensor.hpp"

namespace bort {

inline constexpr int kGramHistBuckets = 64;
inline constexpr double kGramDiagLo = -0.5, kGramDiagHi = 1.5;
inline constexpr double kGramOffdiagLo = -0.5, kGramOffdiagHi = 0.5;

/// Statistics of the Gram matrix G = W^T W, computed in 64-bit. Histograms
/// use fixed bucket ranges (diag [-0.5,1.5], offdiag [-0.5,0.5]) with
/// outliers clamped into the edge buckets.
struct GramStats {
  std::string layer;
  int64_t rows = 0;
  int64_t cols = 0;
  double diag_mean = 0.0;
  double diag_std = 0.0;  // population std
  double offdiag_mean = 0.0;
  double offdiag_std = 0.0;
  double frobenius_residual = 0.0;  // ||W^T W - I||_F
  double max_row_norm = 0.0;        // max_j ||w_j||_2 over filter rows
  std::vector<int64_t> diag_hist;
  std::vector<int64_t> offdiag_hist;
};

GramStats gram_stats(const Tensor& w, const std::string& name = "");

struct BoundednessReport {
  double c_w = 0.0;
  double max_row_norm = 0.0;
  int64_t violations = 0;  // rows with ||w_j|| > c_w
  int64_t rows = 0;
  /// sum_j ||w_j||^2 == cols when the columns are exactly orthonormal.
  double row_norm_sq_sum = 0.0;
};

BoundednessReport boundedness_check(const Tensor& w, double c_w);

struct CapacityReport {
  double max_discrepancy = 0.0;   // max |v0^T W0 x - v1^T W1 x| over probes
  double w1_orth_residual = 0.0;  // ||W1^T W1 - I||_F
  bool pass = false;
};

/// Rewrites (v0, W0) as (v1, W1) with W1 = V^T and v1 = Sigma^T U^T v0 from
/// the SVD of W0, then checks output equality on random probes and the
/// orthogonality of W1.
CapacityReport verify_capacity_equivalence(const Tensor64& v0, const Tensor64& w0, int probes,
                                           uint64_t seed, double out_tol = 1e-8,
                                           double orth_tol = 1e-9);

}  // namespace bort
