#pragma once

#include <vector>

#include "core/dataset.hpp"
#include "core/model_common.hpp"

namespace pcrec {

// Pairwise-ranking matrix factorization: score(u, i) = <user_u, item_i>,
// trained on (user, positive, negative) triples with
// loss = sum_t [ -ln sigmoid(s(u,i+) - s(u,i-)) + l2 * (|u|^2 + |i+|^2 + |i-|^2) ].
template <class T>
class BprModel {
 public:
  static constexpr const char* kKind = "bpr";
  using Batch = std::vector<BprTriple>;

  BprModel(const Dataset& ds, const HyperParams& hp, RngStream& init_rng);

  // One example per training interaction; an epoch resamples a negative for
  // each.
  size_t example_count() const { return pairs_.size(); }
  Batch make_batch(const Dataset& ds, std::span<const uint32_t> idx,
                   RngStream& neg_rng) const;

  double loss(const Dataset& ds, const Batch& batch) const;
  void grad(const Dataset& ds, const Batch& batch, ParamSet<T>& grads) const;
  double train_batch(const Dataset& ds, const Batch& batch, ParamOptimizer<T>& opt,
                     RngStream& drop_rng);

  std::vector<T> score_items(const Dataset& ds, int user, bool include_valid) const;

  ParamSet<T>& params() { return params_; }
  const ParamSet<T>& params() const { return params_; }
  const HyperParams& hp() const { return hp_; }

 private:
  double forward_backward(const Dataset& ds, const Batch& batch,
                          ParamSet<T>* grads) const;

  HyperParams hp_;
  ParamSet<T> params_;
  ParamSet<T> grad_buf_;
  std::vector<std::pair<int, int>> pairs_;  // (user, positive item)
};

using BprModelF = BprModel<float>;
using BprModelD = BprModel<double>;

}  // namespace pcrec
