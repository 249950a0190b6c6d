#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pcrec {

struct AdamOptions {
  double eta = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moment buffers for one parameter tensor.
template <class T>
struct AdamState {
  AdamOptions opt;
  std::vector<T> m;
  std::vector<T> v;
  int64_t step_count = 0;

  AdamState() = default;
  AdamState(size_t n, AdamOptions o) : opt(o), m(n, T(0)), v(n, T(0)) {}
};

// One bias-corrected Adam update. Per-element math runs in double regardless
// of the storage dtype. Throws a numeric error naming `tensor_name` if any
// gradient entry is non-finite.
template <class T>
void adam_step(AdamState<T>& st, std::span<T> params, std::span<const T> grads,
               const char* tensor_name = "");

}  // namespace pcrec
