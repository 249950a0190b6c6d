#include "core/criteria.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace pcrec {

template <class T>
double layer_l1(const Mat<T>& w) {
  double sum = 0.0;
  for (T x : w.flat()) sum += std::fabs(static_cast<double>(x));
  return sum;
}

template <class T>
double relative_l1(const Mat<T>& w_self, const Mat<T>& w_peer) {
  if (!w_self.same_shape(w_peer)) {
    config_error("relative_l1: peer layers have different shapes");
  }
  const double a = layer_l1(w_self);
  const double b = layer_l1(w_peer);
  if (a + b == 0.0) return 0.5;
  return a / (a + b);
}

template <class T>
double entropy(std::span<const T> values, const EntropyConfig& cfg) {
  if (cfg.bins < 2) config_error("entropy: bin count must be >= 2");
  if (values.empty()) return 0.0;
  double lo = static_cast<double>(values[0]);
  double hi = lo;
  for (T x : values) {
    const double v = static_cast<double>(x);
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (hi == lo) return 0.0;
  const int m = cfg.bins;
  const double width = (hi - lo) / m;
  std::vector<int64_t> counts(static_cast<size_t>(m), 0);
  for (T x : values) {
    int b = static_cast<int>(std::floor((static_cast<double>(x) - lo) / width));
    if (b >= m) b = m - 1;  // v == max, plus roundoff spill
    if (b < 0) b = 0;
    counts[static_cast<size_t>(b)] += 1;
  }
  const double n = static_cast<double>(values.size());
  double h = 0.0;
  for (int64_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

template <class T>
std::vector<uint8_t> pw_mask(std::span<const T> values, double gamma) {
  if (gamma < 0) config_error("pw_mask: threshold must be >= 0");
  std::vector<uint8_t> mask(values.size(), 0);
  for (size_t i = 0; i < values.size(); ++i) {
    mask[i] = std::fabs(static_cast<double>(values[i])) < gamma ? 1 : 0;
  }
  return mask;
}

template <class T>
double invalid_layer_ratio(const ParamSet<T>& model, double threshold,
                           const EntropyConfig& cfg, bool include_embeddings) {
  int64_t measured = 0;
  int64_t invalid = 0;
  for (const auto& g : model.groups) {
    if (!include_embeddings && g.role == LayerRole::Embedding) continue;
    if (g.weights.empty()) continue;
    measured += 1;
    if (entropy(g.weights, cfg) < threshold) invalid += 1;
  }
  if (measured == 0) {
    config_error("invalid_layer_ratio: model has no measured layers");
  }
  return static_cast<double>(invalid) / static_cast<double>(measured);
}

template double layer_l1<float>(const Mat<float>&);
template double layer_l1<double>(const Mat<double>&);
template double relative_l1<float>(const Mat<float>&, const Mat<float>&);
template double relative_l1<double>(const Mat<double>&, const Mat<double>&);
template double entropy<float>(std::span<const float>, const EntropyConfig&);
template double entropy<double>(std::span<const double>, const EntropyConfig&);
template std::vector<uint8_t> pw_mask<float>(std::span<const float>, double);
template std::vector<uint8_t> pw_mask<double>(std::span<const double>, double);
template double invalid_layer_ratio<float>(const ParamSet<float>&, double,
                                           const EntropyConfig&, bool);
template double invalid_layer_ratio<double>(const ParamSet<double>&, double,
                                            const EntropyConfig&, bool);

}  // namespace pcrec
