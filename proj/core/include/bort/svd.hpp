#pragma once

#include "bort/tensor.hpp"

namespace bort {

struct SvdResult {
  Tensor64 u;  // [m,m], orthogonal
  Tensor64 s;  // [min(m,n)], descending, non-negative
  Tensor64 v;  // [n,n], orthogonal
};

/// One-sided Jacobi SVD for verification-scale matrices (m, n <= 64),
/// 64-bit. W = U * diag(S) * V^T with U, V fully orthogonal.
/// Throws NumericError if rotations fail to converge.
SvdResult jacobi_svd(const Tensor64& w);

}  // namespace bort
