#include "core/bpr_model.hpp"

namespace pcrec {

template <class T>
BprModel<T>::BprModel(const Dataset& ds, const HyperParams& hp, RngStream& init_rng)
    : hp_(hp) {
  hp_.validate();
  const int d = hp_.dim;

  LayerGroup<T> user_emb;
  user_emb.name = "user_emb";
  user_emb.role = LayerRole::Embedding;
  user_emb.weights = Mat<T>(ds.num_users, d);
  fill_uniform(user_emb.weights.flat(), init_rng, -0.01, 0.01);
  params_.groups.push_back(std::move(user_emb));

  LayerGroup<T> item_emb;
  item_emb.name = "item_emb";
  item_emb.role = LayerRole::Embedding;
  item_emb.weights = Mat<T>(ds.num_items + 1, d);  // row 0 = padding, unused
  fill_uniform(item_emb.weights.flat(), init_rng, -0.01, 0.01);
  for (int c = 0; c < d; ++c) item_emb.weights.at(0, c) = T(0);
  params_.groups.push_back(std::move(item_emb));

  grad_buf_ = clone_shape(params_);

  for (int u = 0; u < ds.num_users; ++u) {
    for (int item : ds.train[static_cast<size_t>(u)]) pairs_.emplace_back(u, item);
  }
}

template <class T>
typename BprModel<T>::Batch BprModel<T>::make_batch(const Dataset& ds,
                                                    std::span<const uint32_t> idx,
                                                    RngStream& neg_rng) const {
  Batch batch;
  batch.reserve(idx.size());
  for (uint32_t i : idx) {
    const auto [u, pos] = pairs_[i];
    int neg = -1;
    for (int attempt = 0; attempt < 100; ++attempt) {
      const int cand =
          1 + static_cast<int>(neg_rng.next_below(static_cast<uint32_t>(ds.num_items)));
      if (!ds.in_train(u, cand)) {
        neg = cand;
        break;
      }
    }
    if (neg < 0) continue;
    batch.push_back({u, pos, neg});
  }
  return batch;
}

template <class T>
double BprModel<T>::forward_backward(const Dataset& ds, const Batch& batch,
                                     ParamSet<T>* grads) const {
  (void)ds;
  const int d = hp_.dim;
  const double l2 = hp_.l2;
  const Mat<T>& ue = params_.groups[0].weights;
  const Mat<T>& ie = params_.groups[1].weights;
  Mat<T>* gue = grads ? &grads->groups[0].weights : nullptr;
  Mat<T>* gie = grads ? &grads->groups[1].weights : nullptr;

  double total = 0.0;
  for (const BprTriple& t : batch) {
    if (t.user < 0 || t.user >= ue.rows || t.pos < 1 || t.pos >= ie.rows ||
        t.neg < 1 || t.neg >= ie.rows) {
      data_error("bpr triple index out of range");
    }
    const T* u = ue.row(t.user);
    const T* p = ie.row(t.pos);
    const T* n = ie.row(t.neg);
    double delta = 0.0, nu = 0.0, np = 0.0, nn = 0.0;
    for (int c = 0; c < d; ++c) {
      delta += static_cast<double>(u[c]) * (static_cast<double>(p[c]) - static_cast<double>(n[c]));
      nu += static_cast<double>(u[c]) * static_cast<double>(u[c]);
      np += static_cast<double>(p[c]) * static_cast<double>(p[c]);
      nn += static_cast<double>(n[c]) * static_cast<double>(n[c]);
    }
    total += softplus_neg(delta) + l2 * (nu + np + nn);
    if (grads) {
      // d/ddelta of -ln sigmoid(delta) is -sigmoid(-delta).
      const double dd = -stable_sigmoid(-delta);
      T* gu = gue->row(t.user);
      T* gp = gie->row(t.pos);
      T* gn = gie->row(t.neg);
      for (int c = 0; c < d; ++c) {
        gu[c] += static_cast<T>(dd * (static_cast<double>(p[c]) - static_cast<double>(n[c])) +
                                2.0 * l2 * static_cast<double>(u[c]));
        gp[c] += static_cast<T>(dd * static_cast<double>(u[c]) +
                                2.0 * l2 * static_cast<double>(p[c]));
        gn[c] += static_cast<T>(-dd * static_cast<double>(u[c]) +
                                2.0 * l2 * static_cast<double>(n[c]));
      }
    }
  }
  return total;
}

template <class T>
double BprModel<T>::loss(const Dataset& ds, const Batch& batch) const {
  return forward_backward(ds, batch, nullptr);
}

template <class T>
void BprModel<T>::grad(const Dataset& ds, const Batch& batch, ParamSet<T>& grads) const {
  forward_backward(ds, batch, &grads);
}

template <class T>
double BprModel<T>::train_batch(const Dataset& ds, const Batch& batch,
                                ParamOptimizer<T>& opt, RngStream& drop_rng) {
  (void)drop_rng;
  grad_buf_.fill(T(0));
  const double loss = forward_backward(ds, batch, &grad_buf_);
  opt.step(params_, grad_buf_);
  return loss;
}

template <class T>
std::vector<T> BprModel<T>::score_items(const Dataset& ds, int user,
                                        bool include_valid) const {
  (void)include_valid;  // scoring depends only on the user factor
  if (user < 0 || user >= ds.num_users) data_error("unknown user id");
  const int d = hp_.dim;
  const Mat<T>& ue = params_.groups[0].weights;
  const Mat<T>& ie = params_.groups[1].weights;
  const T* u = ue.row(user);
  std::vector<T> scores(static_cast<size_t>(ds.num_items));
  for (int item = 1; item <= ds.num_items; ++item) {
    const T* v = ie.row(item);
    double s = 0.0;
    for (int c = 0; c < d; ++c) s += static_cast<double>(u[c]) * static_cast<double>(v[c]);
    scores[static_cast<size_t>(item - 1)] = static_cast<T>(s);
  }
  return scores;
}

template class BprModel<float>;
template class BprModel<double>;

}  // namespace pcrec
