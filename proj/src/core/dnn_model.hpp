#pragma once

#include <vector>

#include "core/dataset.hpp"
#include "core/model_common.hpp"

namespace pcrec {

// Feed-forward recommender over averaged history embeddings: the user vector
// is the mean of the embeddings of the most recent (up to t) interacted
// items, followed by one ReLU hidden layer and a full softmax over the item
// catalog. One training example per (user, position) with the items before
// the position as history.
template <class T>
class DnnModel {
 public:
  static constexpr const char* kKind = "dnn";

  struct Example {
    int user;
    int position;  // index into the user's train list; target = train[position]
  };
  using Batch = std::vector<Example>;

  DnnModel(const Dataset& ds, const HyperParams& hp, RngStream& init_rng);

  size_t example_count() const { return examples_.size(); }
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
  // Mean embedding of up to the last t items in [begin, end).
  std::vector<double> history_vector(std::span<const int> items) const;

  HyperParams hp_;
  ParamSet<T> params_;
  ParamSet<T> grad_buf_;
  std::vector<Example> examples_;
};

using DnnModelF = DnnModel<float>;
using DnnModelD = DnnModel<double>;

}  // namespace pcrec
