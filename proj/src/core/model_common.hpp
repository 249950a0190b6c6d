#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "core/adam.hpp"
#include "core/param_set.hpp"
#include "core/rng.hpp"

namespace pcrec {

struct HyperParams {
  int dim = 64;         // embedding / hidden width d
  int batch = 128;      // examples per optimizer step
  double eta = 1e-3;    // learning rate
  double l2 = 0.0;      // L2 coefficient
  double dropout = 0.0; // attention model only
  int seq_len = 10;     // history window t
  int blocks = 2;       // attention blocks

  void validate() const {
    if (dim <= 0 || batch <= 0 || seq_len < 2 || blocks <= 0) {
      config_error("hyperparameters must be positive (and t >= 2)");
    }
    if (!(eta > 0) || l2 < 0 || dropout < 0 || dropout >= 1) {
      config_error("learning rate must be > 0, l2 >= 0, dropout in [0,1)");
    }
  }
};

// Adam over a whole parameter set: one moment buffer pair per tensor,
// stepped together.
template <class T>
class ParamOptimizer {
 public:
  ParamOptimizer() = default;
  ParamOptimizer(const ParamSet<T>& shape, AdamOptions opt) : opt_(opt) {
    shape.for_each_tensor(
        [&](const LayerGroup<T>& g, TensorKind kind, std::span<const T> t) {
          states_.emplace_back(t.size(), opt);
          names_.push_back(g.name + "." + tensor_kind_name(kind));
        });
  }

  void step(ParamSet<T>& params, const ParamSet<T>& grads) {
    std::vector<std::span<const T>> gspans;
    grads.for_each_tensor([&](const LayerGroup<T>&, TensorKind, std::span<const T> t) {
      gspans.push_back(t);
    });
    size_t i = 0;
    params.for_each_tensor([&](LayerGroup<T>&, TensorKind, std::span<T> t) {
      adam_step(states_[i], t, gspans[i], names_[i].c_str());
      ++i;
    });
  }

  double eta() const { return opt_.eta; }
  void set_eta(double eta) {
    opt_.eta = eta;
    for (auto& s : states_) s.opt.eta = eta;
  }
  int64_t step_count() const { return states_.empty() ? 0 : states_[0].step_count; }

 private:
  AdamOptions opt_;
  std::vector<AdamState<T>> states_;
  std::vector<std::string> names_;
};

template <class T>
void fill_uniform(std::span<T> dst, RngStream& rng, double lo, double hi) {
  for (T& x : dst) x = static_cast<T>(lo + (hi - lo) * rng.next_double());
}

// Xavier-style range for a projection with the given fan-in/out.
template <class T>
void fill_xavier(Mat<T>& w, RngStream& rng) {
  const double s = std::sqrt(6.0 / (w.rows + w.cols));
  fill_uniform(w.flat(), rng, -s, s);
}

inline double stable_sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// -ln sigmoid(z) without overflow.
inline double softplus_neg(double z) {
  // softplus(-z) = log(1 + exp(-z))
  if (z >= 0) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

}  // namespace pcrec
