#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "core/errors.hpp"

namespace pcrec {

// Dense row-major matrix. float is the training dtype throughout; the double
// instantiation exists for the gradient checker.
template <class T>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<T> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, T(0)) {}

  size_t size() const { return a.size(); }
  bool empty() const { return a.empty(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  T* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
  const T* row(int r) const { return a.data() + static_cast<size_t>(r) * cols; }

  T& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  T at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

  std::span<T> flat() { return {a.data(), a.size()}; }
  std::span<const T> flat() const { return {a.data(), a.size()}; }
};

using MatF = Mat<float>;
using MatD = Mat<double>;

template <class T>
bool all_finite(std::span<const T> v);

template <class T>
bool all_finite(const Mat<T>& m) {
  return all_finite(m.flat());
}

// Throws a numeric error naming `what` if any entry is NaN or Inf.
template <class T>
void check_finite(const Mat<T>& m, const char* what);

// Standard product; throws a config error on inner-dimension mismatch.
template <class T>
Mat<T> matmul(const Mat<T>& a, const Mat<T>& b);

}  // namespace pcrec
