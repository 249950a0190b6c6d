#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/matrix.hpp"

namespace pcrec {

enum class LayerRole { Embedding, Middle, Softmax };

const char* role_name(LayerRole role);
LayerRole role_from_name(std::string_view name);

enum class TensorKind { Weights, Bias, NormGain, NormShift };

const char* tensor_kind_name(TensorKind kind);
TensorKind tensor_kind_from_name(std::string_view name);

// One named layer group: a main weight matrix plus optional auxiliary
// vectors (bias, normalization gain/shift). Importance criteria look only at
// `weights`; cooperation blends the auxiliary vectors with the same
// coefficient as their group's weights.
template <class T>
struct LayerGroup {
  std::string name;
  LayerRole role = LayerRole::Middle;
  Mat<T> weights;
  std::vector<T> bias;
  std::vector<T> norm_gain;
  std::vector<T> norm_shift;
};

// Ordered collection of layer groups; the substrate criteria, cooperation,
// checkpointing and the optimizer all act on. Group names are unique.
template <class T>
class ParamSet {
 public:
  std::vector<LayerGroup<T>> groups;

  int index_of(std::string_view name) const {
    for (size_t i = 0; i < groups.size(); ++i) {
      if (groups[i].name == name) return static_cast<int>(i);
    }
    return -1;
  }

  LayerGroup<T>& group(std::string_view name) {
    int i = index_of(name);
    if (i < 0) config_error("no layer group named '" + std::string(name) + "'");
    return groups[static_cast<size_t>(i)];
  }
  const LayerGroup<T>& group(std::string_view name) const {
    return const_cast<ParamSet*>(this)->group(name);
  }

  // fn(LayerGroup&, TensorKind, std::span<T>) over every non-empty tensor,
  // in group order, weights first then bias/gain/shift.
  template <class Fn>
  void for_each_tensor(Fn&& fn) {
    for (auto& g : groups) {
      if (!g.weights.empty()) fn(g, TensorKind::Weights, g.weights.flat());
      if (!g.bias.empty()) fn(g, TensorKind::Bias, std::span<T>(g.bias));
      if (!g.norm_gain.empty()) fn(g, TensorKind::NormGain, std::span<T>(g.norm_gain));
      if (!g.norm_shift.empty()) fn(g, TensorKind::NormShift, std::span<T>(g.norm_shift));
    }
  }
  template <class Fn>
  void for_each_tensor(Fn&& fn) const {
    for (auto& g : groups) {
      if (!g.weights.empty())
        fn(g, TensorKind::Weights, std::span<const T>(g.weights.flat()));
      if (!g.bias.empty()) fn(g, TensorKind::Bias, std::span<const T>(g.bias));
      if (!g.norm_gain.empty())
        fn(g, TensorKind::NormGain, std::span<const T>(g.norm_gain));
      if (!g.norm_shift.empty())
        fn(g, TensorKind::NormShift, std::span<const T>(g.norm_shift));
    }
  }

  size_t total_size() const {
    size_t n = 0;
    for_each_tensor([&](const LayerGroup<T>&, TensorKind, std::span<const T> t) {
      n += t.size();
    });
    return n;
  }

  // Flat coordinate access across all tensors, used by the gradient checker.
  T get_flat(size_t idx) const {
    size_t base = 0;
    T out{};
    bool done = false;
    for_each_tensor([&](const LayerGroup<T>&, TensorKind, std::span<const T> t) {
      if (!done && idx < base + t.size()) {
        out = t[idx - base];
        done = true;
      }
      base += t.size();
    });
    if (!done) config_error("flat index out of range");
    return out;
  }
  void set_flat(size_t idx, T value) {
    size_t base = 0;
    bool done = false;
    for_each_tensor([&](LayerGroup<T>&, TensorKind, std::span<T> t) {
      if (!done && idx < base + t.size()) {
        t[idx - base] = value;
        done = true;
      }
      base += t.size();
    });
    if (!done) config_error("flat index out of range");
  }

  void fill(T value) {
    for_each_tensor([&](LayerGroup<T>&, TensorKind, std::span<T> t) {
      for (T& x : t) x = value;
    });
  }
};

// Same names, roles and shapes in the same order.
template <class T>
bool same_structure(const ParamSet<T>& a, const ParamSet<T>& b);

template <class T>
void require_same_structure(const ParamSet<T>& a, const ParamSet<T>& b);

// Zero-filled copy with identical structure (gradient buffers).
template <class T>
ParamSet<T> clone_shape(const ParamSet<T>& src);

// Bit-level FNV-1a over all tensors; detects any parameter mutation.
uint64_t param_checksum(const ParamSet<float>& p);

using ParamSetF = ParamSet<float>;
using ParamSetD = ParamSet<double>;

}  // namespace pcrec
