#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "core/matrix.hpp"
#include "core/param_set.hpp"

namespace pcrec {

// Histogram settings for the entropy criterion. Entropy uses the natural
// log, so values lie in [0, ln bins].
struct EntropyConfig {
  int bins = 100;
};

// Sum of absolute values over the whole layer.
template <class T>
double layer_l1(const Mat<T>& w);

// ||self|| / (||self|| + ||peer||); 0.5 when both norms vanish.
template <class T>
double relative_l1(const Mat<T>& w_self, const Mat<T>& w_peer);

// Shannon entropy of the value histogram over `bins` equal-width bins
// spanning [min, max]. Element v lands in bin floor((v-min)/width), with
// v == max assigned to the last bin; empty bins contribute nothing. A
// constant matrix has entropy 0.
template <class T>
double entropy(std::span<const T> values, const EntropyConfig& cfg);

template <class T>
double entropy(const Mat<T>& w, const EntropyConfig& cfg) {
  return entropy(w.flat(), cfg);
}

// mask[e] = 1 exactly when |w[e]| < gamma.
template <class T>
std::vector<uint8_t> pw_mask(std::span<const T> values, double gamma);

template <class T>
std::vector<uint8_t> pw_mask(const Mat<T>& w, double gamma) {
  return pw_mask(std::span<const T>(w.flat()), gamma);
}

// Fraction of measured layers whose weight-matrix entropy falls below
// `threshold`. Measured layers are the non-embedding groups by default;
// set include_embeddings to measure embedding tables too. Throws a config
// error if nothing is measured.
template <class T>
double invalid_layer_ratio(const ParamSet<T>& model, double threshold,
                           const EntropyConfig& cfg, bool include_embeddings = false);

}  // namespace pcrec
