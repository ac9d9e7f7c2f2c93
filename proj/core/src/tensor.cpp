#include "bort/tensor.hpp"

#include <cmath>
#include <sstream>

namespace bort {

std::string shape_str(const std::vector<int64_t>& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << "]";
  return os.str();
}

namespace {
template <class T>
void require_same(const TensorT<T>& a, const TensorT<T>& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}
}  // namespace

template <class T>
void add_inplace(TensorT<T>& a, const TensorT<T>& b) {
  require_same(a, b, "add");
  T* pa = a.data();
  const T* pb = b.data();
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) pa[i] += pb[i];
}

template <class T>
void sub_inplace(TensorT<T>& a, const TensorT<T>& b) {
  require_same(a, b, "sub");
  T* pa = a.data();
  const T* pb = b.data();
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) pa[i] -= pb[i];
}

template <class T>
void scale_inplace(TensorT<T>& a, T s) {
  T* pa = a.data();
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) pa[i] *= s;
}

template <class T>
void axpy_inplace(TensorT<T>& a, T s, const TensorT<T>& b) {
  require_same(a, b, "axpy");
  T* pa = a.data();
  const T* pb = b.data();
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) pa[i] += s * pb[i];
}

template <class T>
T dot(const TensorT<T>& a, const TensorT<T>& b) {
  require_same(a, b, "dot");
  const T* pa = a.data();
  const T* pb = b.data();
  const int64_t n = a.size();
  T acc{};
  for (int64_t i = 0; i < n; ++i) acc += pa[i] * pb[i];
  return acc;
}

template <class T>
T norm2(const TensorT<T>& a) {
  const T* pa = a.data();
  const int64_t n = a.size();
  T acc{};
  for (int64_t i = 0; i < n; ++i) acc += pa[i] * pa[i];
  return std::sqrt(acc);
}

template <class T>
T max_abs(const TensorT<T>& a) {
  const T* pa = a.data();
  const int64_t n = a.size();
  T m{};
  for (int64_t i = 0; i < n; ++i) {
    const T v = std::abs(pa[i]);
    if (v > m) m = v;
  }
  return m;
}

#define BORT_INSTANTIATE(T)                                     \
  template void add_inplace<T>(TensorT<T>&, const TensorT<T>&); \
  template void sub_inplace<T>(TensorT<T>&, const TensorT<T>&); \
  template void scale_inplace<T>(TensorT<T>&, T);               \
  template void axpy_inplace<T>(TensorT<T>&, T, const TensorT<T>&); \
  template T dot<T>(const TensorT<T>&, const TensorT<T>&);      \
  template T norm2<T>(const TensorT<T>&);                       \
  template T max_abs<T>(const TensorT<T>&);

BORT_INSTANTIATE(float)
BORT_INSTANTIATE(double)
#undef BORT_INSTANTIATE

}  // namespace bort
