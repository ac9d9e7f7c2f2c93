#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "bort/error.hpp"

namespace bort {

/// Dense row-major N-dimensional array. Training paths instantiate float,
/// oracle paths double, index payloads int64_t.
template <class T>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(std::vector<int64_t> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(checked_size(shape_)), T{});
  }

  TensorT(std::vector<int64_t> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_size(shape_) != static_cast<int64_t>(data_.size()))
      throw ShapeError("tensor data length does not match shape product");
  }

  static TensorT zeros(std::vector<int64_t> shape) { return TensorT(std::move(shape)); }

  static TensorT full(std::vector<int64_t> shape, T v) {
    TensorT t(std::move(shape));
    for (auto& x : t.data_) x = v;
    return t;
  }

  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t ndim() const { return static_cast<int64_t>(shape_.size()); }
  int64_t dim(int64_t i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return {data_.data(), data_.size()}; }
  std::span<const T> values() const { return {data_.data(), data_.size()}; }

  T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // Row-major index helpers for the common ranks.
  T& at2(int64_t r, int64_t c) { return data_[static_cast<size_t>(r * shape_[1] + c)]; }
  const T& at2(int64_t r, int64_t c) const { return data_[static_cast<size_t>(r * shape_[1] + c)]; }
  T& at4(int64_t n, int64_t c, int64_t h, int64_t w) {
    return data_[static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }
  const T& at4(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return data_[static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }

  /// Same data, new shape (product must match).
  TensorT reshaped(std::vector<int64_t> shape) const& {
    if (checked_size(shape) != size()) throw ShapeError("reshape changes element count");
    TensorT t;
    t.shape_ = std::move(shape);
    t.data_ = data_;
    return t;
  }
  TensorT reshaped(std::vector<int64_t> shape) && {
    if (checked_size(shape) != size()) throw ShapeError("reshape changes element count");
    TensorT t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data_);
    return t;
  }

  bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    if constexpr (std::is_floating_point_v<T>) {
      for (const T v : data_)
        if (!std::isfinite(v)) return false;
    }
    return true;
  }

  void fill(T v) {
    for (auto& x : data_) x = v;
  }

  template <class U>
  TensorT<U> cast() const {
    std::vector<U> out(data_.size());
    for (size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return TensorT<U>(shape_, std::move(out));
  }

  static int64_t checked_size(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (const int64_t d : shape) {
      if (d < 0) throw ShapeError("negative extent");
      n *= d;
    }
    return n;
  }

 private:
  std::vector<int64_t> shape_;
  std::vector<T> data_;
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;
using IndexTensor = TensorT<int64_t>;
using MaskTensor = TensorT<uint8_t>;

std::string shape_str(const std::vector<int64_t>& s);

// In-place elementwise arithmetic over matching shapes.
template <class T>
void add_inplace(TensorT<T>& a, const TensorT<T>& b);
template <class T>
void sub_inplace(TensorT<T>& a, const TensorT<T>& b);
template <class T>
void scale_inplace(TensorT<T>& a, T s);
/// a += s * b
template <class T>
void axpy_inplace(TensorT<T>& a, T s, const TensorT<T>& b);

template <class T>
T dot(const TensorT<T>& a, const TensorT<T>& b);
template <class T>
T norm2(const TensorT<T>& a);
template <class T>
T max_abs(const TensorT<T>& a);

}  // namespace bort
