#pragma once

#include <functional>

#include "bort/tensor.hpp"

namespace bort {

/// Central-difference gradient of a scalar function, 64-bit throughout.
/// Throws NumericError if f returns a non-finite value at any probe.
Tensor64 finite_diff_grad(const std::function<double(const Tensor64&)>& f, const Tensor64& x,
                          double h);

/// max_i |a_i - b_i| / max(1, max_i |b_i|) with b the reference.
double relative_error(const Tensor64& a, const Tensor64& b);

}  // namespace bort
