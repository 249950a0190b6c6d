#include "core/adam.hpp"

#include <cmath>
#include <string>

#include "core/errors.hpp"

namespace pcrec {

template <class T>
void adam_step(AdamState<T>& st, std::span<T> params, std::span<const T> grads,
               const char* tensor_name) {
  if (params.size() != grads.size() || params.size() != st.m.size()) {
    config_error(std::string("adam_step: shape mismatch for ") + tensor_name);
  }
  for (size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(static_cast<double>(grads[i]))) {
      numeric_error(std::string("adam_step: non-finite gradient in ") + tensor_name);
    }
  }
  st.step_count += 1;
  const double b1 = st.opt.beta1;
  const double b2 = st.opt.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.step_count));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.step_count));
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = static_cast<double>(grads[i]);
    const double m = b1 * static_cast<double>(st.m[i]) + (1.0 - b1) * g;
    const double v = b2 * static_cast<double>(st.v[i]) + (1.0 - b2) * g * g;
    st.m[i] = static_cast<T>(m);
    st.v[i] = static_cast<T>(v);
    const double update = st.opt.eta * (m / c1) / (std::sqrt(v / c2) + st.opt.eps);
    params[i] = static_cast<T>(static_cast<double>(params[i]) - update);
  }
}

template void adam_step<float>(AdamState<float>&, std::span<float>,
                               std::span<const float>, const char*);
template void adam_step<double>(AdamState<double>&, std::span<double>,
                                std::span<const double>, const char*);

}  // namespace pcrec
