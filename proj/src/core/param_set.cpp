#include "core/param_set.hpp"

#include <cstring>

namespace pcrec {

const char* role_name(LayerRole role) {
  switch (role) {
    case LayerRole::Embedding: return "embedding";
    case LayerRole::Middle: return "middle";
    case LayerRole::Softmax: return "softmax";
  }
  return "?";
}

LayerRole role_from_name(std::string_view name) {
  if (name == "embedding") return LayerRole::Embedding;
  if (name == "middle") return LayerRole::Middle;
  if (name == "softmax") return LayerRole::Softmax;
  config_error("unknown layer role '" + std::string(name) + "'");
}

const char* tensor_kind_name(TensorKind kind) {
  switch (kind) {
    case TensorKind::Weights: return "weights";
    case TensorKind::Bias: return "bias";
    case TensorKind::NormGain: return "norm_gain";
    case TensorKind::NormShift: return "norm_shift";
  }
  return "?";
}

TensorKind tensor_kind_from_name(std::string_view name) {
  if (name == "weights") return TensorKind::Weights;
  if (name == "bias") return TensorKind::Bias;
  if (name == "norm_gain") return TensorKind::NormGain;
  if (name == "norm_shift") return TensorKind::NormShift;
  config_error("unknown tensor kind '" + std::string(name) + "'");
}

template <class T>
bool same_structure(const ParamSet<T>& a, const ParamSet<T>& b) {
  if (a.groups.size() != b.groups.size()) return false;
  for (size_t i = 0; i < a.groups.size(); ++i) {
    const auto& ga = a.groups[i];
    const auto& gb = b.groups[i];
    if (ga.name != gb.name || ga.role != gb.role) return false;
    if (!ga.weights.same_shape(gb.weights)) return false;
    if (ga.bias.size() != gb.bias.size()) return false;
    if (ga.norm_gain.size() != gb.norm_gain.size()) return false;
    if (ga.norm_shift.size() != gb.norm_shift.size()) return false;
  }
  return true;
}

template <class T>
void require_same_structure(const ParamSet<T>& a, const ParamSet<T>& b) {
  if (!same_structure(a, b)) {
    config_error("peer parameter sets are not structurally identical");
  }
}

template <class T>
ParamSet<T> clone_shape(const ParamSet<T>& src) {
  ParamSet<T> out;
  out.groups.reserve(src.groups.size());
  for (const auto& g : src.groups) {
    LayerGroup<T> c;
    c.name = g.name;
    c.role = g.role;
    c.weights = Mat<T>(g.weights.rows, g.weights.cols);
    c.bias.assign(g.bias.size(), T(0));
    c.norm_gain.assign(g.norm_gain.size(), T(0));
    c.norm_shift.assign(g.norm_shift.size(), T(0));
    out.groups.push_back(std::move(c));
  }
  return out;
}

uint64_t param_checksum(const ParamSet<float>& p) {
  uint64_t h = 1469598103934665603ULL;
  p.for_each_tensor([&](const LayerGroup<float>&, TensorKind, std::span<const float> t) {
    for (float x : t) {
      uint32_t bits;
      std::memcpy(&bits, &x, sizeof(bits));
      for (int s = 0; s < 32; s += 8) {
        h ^= (bits >> s) & 0xffu;
        h *= 1099511628211ULL;
      }
    }
  });
  return h;
}

template bool same_structure<float>(const ParamSet<float>&, const ParamSet<float>&);
template bool same_structure<double>(const ParamSet<double>&, const ParamSet<double>&);
template void require_same_structure<float>(const ParamSet<float>&, const ParamSet<float>&);
template void require_same_structure<double>(const ParamSet<double>&, const ParamSet<double>&);
template ParamSet<float> clone_shape<float>(const ParamSet<float>&);
template ParamSet<double> clone_shape<double>(const ParamSet<double>&);

}  // namespace pcrec
