#pragma once

#include <vector>

#include "core/dataset.hpp"
#include "core/model_common.hpp"

namespace pcrec {

// Sequential recommender: learned item + position embeddings feeding a stack
// of single-head causal self-attention blocks (pre-layer-norm, residual,
// position-wise ReLU feed-forward), scoring items against the shared item
// embedding table. Trained with next-item binary cross-entropy using one
// sampled negative per position.
//
// Sequences are left-padded with item 0; pad positions carry zero vectors
// through every block, are excluded from attention keys, and contribute no
// loss. Queries only attend to positions <= their own, so a position's
// output never depends on later items.
template <class T>
class SasModel {
 public:
  static constexpr const char* kKind = "saslite";

  struct Sequence {
    std::vector<int> in;   // length t inputs
    std::vector<int> tg;   // length t next-item targets (0 where unsupervised)
    std::vector<int> ng;   // length t sampled negatives (0 where unsupervised)
  };
  using Batch = std::vector<Sequence>;

  SasModel(const Dataset& ds, const HyperParams& hp, RngStream& init_rng);

  size_t example_count() const { return chunks_.size(); }
  Batch make_batch(const Dataset& ds, std::span<const uint32_t> idx,
                   RngStream& neg_rng) const;

  double loss(const Dataset& ds, const Batch& batch) const;
  void grad(const Dataset& ds, const Batch& batch, ParamSet<T>& grads) const;
  double train_batch(const Dataset& ds, const Batch& batch, ParamOptimizer<T>& opt,
                     RngStream& drop_rng);

  std::vector<T> score_items(const Dataset& ds, int user, bool include_valid) const;

  // Hidden states of every position for one input sequence, dropout off.
  // Row j is position j's output; used by scoring and the causality checks.
  std::vector<std::vector<double>> hidden_states(const std::vector<int>& inputs) const;

  ParamSet<T>& params() { return params_; }
  const ParamSet<T>& params() const { return params_; }
  const HyperParams& hp() const { return hp_; }

 private:
  struct BlockWork;
  struct Work;

  // Names of the per-block groups, e.g. "block0.attn.q".
  int gi(int block, const char* part) const;

  void forward_sequence(const std::vector<int>& in, Work& w, bool use_dropout,
                        RngStream* drop_rng) const;
  double forward_backward(const Dataset& ds, const Batch& batch, ParamSet<T>* grads,
                          bool use_dropout, RngStream* drop_rng) const;

  HyperParams hp_;
  ParamSet<T> params_;
  ParamSet<T> grad_buf_;
  std::vector<std::pair<std::vector<int>, std::vector<int>>> chunks_;  // (in, tg)
};

using SasModelF = SasModel<float>;
using SasModelD = SasModel<double>;

}  // namespace pcrec
