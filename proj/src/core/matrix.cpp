#include "core/matrix.hpp"

#include <cmath>
#include <string>

namespace pcrec {

template <class T>
bool all_finite(std::span<const T> v) {
  for (T x : v) {
    if (!std::isfinite(static_cast<double>(x))) return false;
  }
  return true;
}

template <class T>
void check_finite(const Mat<T>& m, const char* what) {
  if (!all_finite(m)) {
    numeric_error(std::string("non-finite values in ") + what);
  }
}

template <class T>
Mat<T> matmul(const Mat<T>& a, const Mat<T>& b) {
  if (a.cols != b.rows) {
    config_error("matmul: inner dimensions disagree (" + std::to_string(a.cols) +
                 " vs " + std::to_string(b.rows) + ")");
  }
  Mat<T> c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const T* ra = a.row(i);
    T* rc = c.row(i);
    for (int k = 0; k < a.cols; ++k) {
      const T aik = ra[k];
      if (aik == T(0)) continue;
      const T* rb = b.row(k);
      for (int j = 0; j < b.cols; ++j) rc[j] += aik * rb[j];
    }
  }
  check_finite(c, "matmul result");
  return c;
}

template bool all_finite<float>(std::span<const float>);
template bool all_finite<double>(std::span<const double>);
template void check_finite<float>(const Mat<float>&, const char*);
template void check_finite<double>(const Mat<double>&, const char*);
template Mat<float> matmul<float>(const Mat<float>&, const Mat<float>&);
template Mat<double> matmul<double>(const Mat<double>&, const Mat<double>&);

}  // namespace pcrec
