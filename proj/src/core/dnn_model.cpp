#include "core/dnn_model.hpp"

#include <algorithm>
#include <cstdio>

namespace pcrec {

template <class T>
DnnModel<T>::DnnModel(const Dataset& ds, const HyperParams& hp, RngStream& init_rng)
    : hp_(hp) {
  hp_.validate();
  const int d = hp_.dim;

  LayerGroup<T> item_emb;
  item_emb.name = "item_emb";
  item_emb.role = LayerRole::Embedding;
  item_emb.weights = Mat<T>(ds.num_items + 1, d);
  fill_uniform(item_emb.weights.flat(), init_rng, -0.01, 0.01);
  for (int c = 0; c < d; ++c) item_emb.weights.at(0, c) = T(0);
  params_.groups.push_back(std::move(item_emb));

  LayerGroup<T> hidden;
  hidden.name = "hidden";
  hidden.role = LayerRole::Middle;
  hidden.weights = Mat<T>(d, d);  // input dim x output dim
  hidden.bias.assign(static_cast<size_t>(d), T(0));
  fill_xavier(hidden.weights, init_rng);
  params_.groups.push_back(std::move(hidden));

  LayerGroup<T> output;
  output.name = "output";
  output.role = LayerRole::Softmax;
  output.weights = Mat<T>(ds.num_items, d);  // row k scores item id k+1
  output.bias.assign(static_cast<size_t>(ds.num_items), T(0));
  fill_xavier(output.weights, init_rng);
  params_.groups.push_back(std::move(output));

  grad_buf_ = clone_shape(params_);

  for (int u = 0; u < ds.num_users; ++u) {
    const auto& items = ds.train[static_cast<size_t>(u)];
    for (size_t j = 1; j < items.size(); ++j) {
      examples_.push_back({u, static_cast<int>(j)});
    }
  }
}

template <class T>
typename DnnModel<T>::Batch DnnModel<T>::make_batch(const Dataset&,
                                                    std::span<const uint32_t> idx,
                                                    RngStream&) const {
  Batch batch;
  batch.reserve(idx.size());
  for (uint32_t i : idx) batch.push_back(examples_[i]);
  return batch;
}

template <class T>
std::vector<double> DnnModel<T>::history_vector(std::span<const int> items) const {
  const int d = hp_.dim;
  std::vector<double> e(static_cast<size_t>(d), 0.0);
  const Mat<T>& emb = params_.groups[0].weights;
  const size_t take = std::min(items.size(), static_cast<size_t>(hp_.seq_len));
  const size_t begin = items.size() - take;
  for (size_t j = begin; j < items.size(); ++j) {
    const T* row = emb.row(items[j]);
    for (int c = 0; c < d; ++c) e[static_cast<size_t>(c)] += static_cast<double>(row[c]);
  }
  for (double& x : e) x /= static_cast<double>(take);
  return e;
}

template <class T>
double DnnModel<T>::forward_backward(const Dataset& ds, const Batch& batch,
                                     ParamSet<T>* grads) const {
  const int d = hp_.dim;
  const int num_items = ds.num_items;
  const Mat<T>& emb = params_.groups[0].weights;
  const Mat<T>& w1 = params_.groups[1].weights;
  const auto& b1 = params_.groups[1].bias;
  const Mat<T>& wo = params_.groups[2].weights;
  const auto& bo = params_.groups[2].bias;

  double total = 0.0;
  std::vector<double> hpre(static_cast<size_t>(d));
  std::vector<double> h(static_cast<size_t>(d));
  std::vector<double> logits(static_cast<size_t>(num_items));
  std::vector<double> dlogits(static_cast<size_t>(num_items));
  std::vector<double> dh(static_cast<size_t>(d));
  std::vector<double> de(static_cast<size_t>(d));

  for (const Example& ex : batch) {
    const auto& items = ds.train[static_cast<size_t>(ex.user)];
    if (ex.position <= 0 || static_cast<size_t>(ex.position) >= items.size()) {
      std::fprintf(stderr, "dnn: skipping example with empty history (user %d)\n",
                   ex.user);
      continue;
    }
    const int target = items[static_cast<size_t>(ex.position)];
    const std::span<const int> hist(items.data(), static_cast<size_t>(ex.position));
    const std::vector<double> e = history_vector(hist);

    for (int o = 0; o < d; ++o) {
      double acc = static_cast<double>(b1[static_cast<size_t>(o)]);
      for (int i = 0; i < d; ++i) acc += e[static_cast<size_t>(i)] * static_cast<double>(w1.at(i, o));
      hpre[static_cast<size_t>(o)] = acc;
      h[static_cast<size_t>(o)] = acc > 0 ? acc : 0.0;
    }
    double max_logit = -1e300;
    for (int k = 0; k < num_items; ++k) {
      double acc = static_cast<double>(bo[static_cast<size_t>(k)]);
      const T* row = wo.row(k);
      for (int c = 0; c < d; ++c) acc += h[static_cast<size_t>(c)] * static_cast<double>(row[c]);
      logits[static_cast<size_t>(k)] = acc;
      max_logit = std::max(max_logit, acc);
    }
    double z = 0.0;
    for (int k = 0; k < num_items; ++k) z += std::exp(logits[static_cast<size_t>(k)] - max_logit);
    const double log_z = std::log(z) + max_logit;
    total += log_z - logits[static_cast<size_t>(target - 1)];

    if (!grads) continue;
    Mat<T>& gemb = grads->groups[0].weights;
    Mat<T>& gw1 = grads->groups[1].weights;
    auto& gb1 = grads->groups[1].bias;
    Mat<T>& gwo = grads->groups[2].weights;
    auto& gbo = grads->groups[2].bias;

    std::fill(dh.begin(), dh.end(), 0.0);
    for (int k = 0; k < num_items; ++k) {
      double p = std::exp(logits[static_cast<size_t>(k)] - log_z);
      if (k == target - 1) p -= 1.0;
      dlogits[static_cast<size_t>(k)] = p;
      gbo[static_cast<size_t>(k)] += static_cast<T>(p);
      T* grow = gwo.row(k);
      const T* row = wo.row(k);
      for (int c = 0; c < d; ++c) {
        grow[c] += static_cast<T>(p * h[static_cast<size_t>(c)]);
        dh[static_cast<size_t>(c)] += p * static_cast<double>(row[c]);
      }
    }
    std::fill(de.begin(), de.end(), 0.0);
    for (int o = 0; o < d; ++o) {
      const double dpre = hpre[static_cast<size_t>(o)] > 0 ? dh[static_cast<size_t>(o)] : 0.0;
      if (dpre == 0.0) continue;
      gb1[static_cast<size_t>(o)] += static_cast<T>(dpre);
      for (int i = 0; i < d; ++i) {
        gw1.at(i, o) += static_cast<T>(dpre * e[static_cast<size_t>(i)]);
        de[static_cast<size_t>(i)] += dpre * static_cast<double>(w1.at(i, o));
      }
    }
    const size_t take = std::min(hist.size(), static_cast<size_t>(hp_.seq_len));
    const double inv = 1.0 / static_cast<double>(take);
    for (size_t j = hist.size() - take; j < hist.size(); ++j) {
      T* grow = gemb.row(hist[j]);
      for (int c = 0; c < d; ++c) grow[c] += static_cast<T>(de[static_cast<size_t>(c)] * inv);
    }
  }

  // One whole-parameter L2 term per batch.
  if (hp_.l2 > 0) {
    double sq = 0.0;
    params_.for_each_tensor([&](const LayerGroup<T>&, TensorKind, std::span<const T> t) {
      for (T x : t) sq += static_cast<double>(x) * static_cast<double>(x);
    });
    total += hp_.l2 * sq;
    if (grads) {
      std::vector<std::span<const T>> psp;
      params_.for_each_tensor([&](const LayerGroup<T>&, TensorKind, std::span<const T> t) {
        psp.push_back(t);
      });
      size_t i = 0;
      grads->for_each_tensor([&](LayerGroup<T>&, TensorKind, std::span<T> t) {
        for (size_t k = 0; k < t.size(); ++k) {
          t[k] += static_cast<T>(2.0 * hp_.l2 * static_cast<double>(psp[i][k]));
        }
        ++i;
      });
    }
  }
  return total;
}

template <class T>
double DnnModel<T>::loss(const Dataset& ds, const Batch& batch) const {
  return forward_backward(ds, batch, nullptr);
}

template <class T>
void DnnModel<T>::grad(const Dataset& ds, const Batch& batch, ParamSet<T>& grads) const {
  forward_backward(ds, batch, &grads);
}

template <class T>
double DnnModel<T>::train_batch(const Dataset& ds, const Batch& batch,
                                ParamOptimizer<T>& opt, RngStream&) {
  grad_buf_.fill(T(0));
  const double loss = forward_backward(ds, batch, &grad_buf_);
  opt.step(params_, grad_buf_);
  return loss;
}

template <class T>
std::vector<T> DnnModel<T>::score_items(const Dataset& ds, int user,
                                        bool include_valid) const {
  if (user < 0 || user >= ds.num_users) data_error("unknown user id");
  const int d = hp_.dim;
  std::vector<int> hist = ds.train[static_cast<size_t>(user)];
  if (include_valid) hist.push_back(ds.valid[static_cast<size_t>(user)]);
  const std::vector<double> e = history_vector(hist);

  const Mat<T>& w1 = params_.groups[1].weights;
  const auto& b1 = params_.groups[1].bias;
  const Mat<T>& wo = params_.groups[2].weights;
  const auto& bo = params_.groups[2].bias;
  std::vector<double> h(static_cast<size_t>(d));
  for (int o = 0; o < d; ++o) {
    double acc = static_cast<double>(b1[static_cast<size_t>(o)]);
    for (int i = 0; i < d; ++i) acc += e[static_cast<size_t>(i)] * static_cast<double>(w1.at(i, o));
    h[static_cast<size_t>(o)] = acc > 0 ? acc : 0.0;
  }
  std::vector<T> scores(static_cast<size_t>(ds.num_items));
  for (int k = 0; k < ds.num_items; ++k) {
    double acc = static_cast<double>(bo[static_cast<size_t>(k)]);
    const T* row = wo.row(k);
    for (int c = 0; c < d; ++c) acc += h[static_cast<size_t>(c)] * static_cast<double>(row[c]);
    scores[static_cast<size_t>(k)] = static_cast<T>(acc);
  }
  return scores;
}

template class DnnModel<float>;
template class DnnModel<double>;

}  // namespace pcrec
