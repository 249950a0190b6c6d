#include <cmath>
#include <numeric>

#include "core/bpr_model.hpp"
#include "core/cooperation.hpp"
#include "core/dnn_model.hpp"
#include "core/grad_check.hpp"
#include "core/sas_model.hpp"
#include "doctest.h"

using namespace pcrec;

namespace {

// Hand-built dataset; enough users/items to exercise every code path.
Dataset toy_dataset() {
  Dataset ds;
  ds.num_users = 5;
  ds.num_items = 6;
  ds.train = {{1, 2, 3}, {2, 3, 4}, {3, 4, 5, 6}, {4, 5}, {5, 6, 1, 2}};
  ds.valid = {4, 5, 1, 6, 3};
  ds.test = {5, 6, 2, 1, 4};
  ds.train_sets = ds.train;
  for (auto& s : ds.train_sets) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  }
  return ds;
}

template <class Model, class T>
double run_grad_check(Model& model, const Dataset& ds, const typename Model::Batch& batch,
                      int probes, double h) {
  ParamSet<T> analytic = clone_shape(model.params());
  model.grad(ds, batch, analytic);
  auto loss = [&]() { return model.loss(ds, batch); };
  RngStream rng(123, stream_id(StreamKind::Probe));
  return grad_check(loss, model.params(), analytic, probes, h, rng);
}

}  // namespace

TEST_CASE("bpr: tied positive and negative give ln 2 loss and zero gradient") {
  Dataset ds = toy_dataset();
  HyperParams hp;
  hp.dim = 4;
  hp.l2 = 0.0;
  RngStream init(1, stream_id(StreamKind::Init));
  BprModelD model(ds, hp, init);
  BprModelD::Batch batch{{0, 2, 2}};
  CHECK(model.loss(ds, batch) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  ParamSet<double> g = clone_shape(model.params());
  model.grad(ds, batch, g);
  g.for_each_tensor([](LayerGroup<double>&, TensorKind, std::span<double> t) {
    for (double x : t) CHECK(x == 0.0);
  });
}

TEST_CASE("bpr: zero-init model loses |batch| ln 2 on the first step") {
  Dataset ds = toy_dataset();
  HyperParams hp;
  hp.dim = 4;
  hp.l2 = 0.0;
  RngStream init(1, stream_id(StreamKind::Init));
  BprModelF model(ds, hp, init);
  model.params().fill(0.0f);
  RngStream neg(2, stream_id(StreamKind::Negatives));
  std::vector<uint32_t> idx(8);
  std::iota(idx.begin(), idx.end(), 0u);
  auto batch = model.make_batch(ds, idx, neg);
  REQUIRE(batch.size() == 8);
  CHECK(model.loss(ds, batch) == doctest::Approx(8.0 * std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("bpr: analytic gradients match finite differences") {
  Dataset ds = toy_dataset();
  HyperParams hp;
  hp.dim = 5;
  hp.l2 = 0.01;
  RngStream init(3, stream_id(StreamKind::Init));
  BprModelD model(ds, hp, init);
  // Make the factors non-trivially sized so gradients are well away from 0.
  for (auto& g : model.params().groups) {
    for (auto& x : g.weights.a) x *= 50.0;
  }
  BprModelD::Batch batch{{0, 1, 4}, {1, 2, 5}, {2, 3, 1}, {3, 4, 2}, {4, 5, 3}};
  const double err = run_grad_check<BprModelD, double>(model, ds, batch, 200, 1e-5);
  CHECK(err <= 1e-4);
}

TEST_CASE("bpr: score_all_items equals hand dot products") {
  Dataset ds = toy_dataset();
  ds.num_users = 1;
  ds.num_items = 3;
  ds.train = {{1, 2}};
  ds.valid = {3};
  ds.test = {1};
  ds.train_sets = {{1, 2}};
  HyperParams hp;
  hp.dim = 2;
  RngStream init(4, stream_id(StreamKind::Init));
  BprModelF model(ds, hp, init);
  auto& ue = model.params().group("user_emb").weights;
  auto& ie = model.params().group("item_emb").weights;
  ue.at(0, 0) = 1.0f;
  ue.at(0, 1) = 2.0f;
  ie.at(1, 0) = 0.5f;
  ie.at(1, 1) = 0.5f;  // item 1 -> 1.5
  ie.at(2, 0) = -1.0f;
  ie.at(2, 1) = 1.0f;  // item 2 -> 1.0
  ie.at(3, 0) = 0.0f;
  ie.at(3, 1) = 0.0f;  // item 3 -> 0.0
  auto scores = model.score_items(ds, 0, false);
  REQUIRE(scores.size() == 3);
  CHECK(scores[0] == doctest::Approx(1.5));
  CHECK(scores[1] == doctest::Approx(1.0));
  CHECK(scores[2] == doctest::Approx(0.0));

  auto& zue = model.params().group("user_emb").weights;
  zue.at(0, 0) = 0.0f;
  zue.at(0, 1) = 0.0f;
  for (float s : model.score_items(ds, 0, false)) CHECK(s == 0.0f);

  CHECK_THROWS_AS(model.score_items(ds, 7, false), Error);
}

TEST_CASE("dnn: zero parameters give uniform logits and ln V loss") {
  Dataset ds = toy_dataset();
  HyperParams hp;
  hp.dim = 4;
  hp.seq_len = 4;
  RngStream init(5, stream_id(StreamKind::Init));
  DnnModelD model(ds, hp, init);
  model.params().fill(0.0);
  DnnModelD::Batch batch{{0, 1}};
  CHECK(model.loss(ds, batch) == doctest::Approx(std::log(6.0)).epsilon(1e-12));
}

TEST_CASE("dnn: adding a constant to every output bias leaves the loss unchanged") {
  Dataset ds = toy_dataset();
  HyperParams hp;
  hp.dim = 4;
  hp.seq_len = 4;
  hp.l2 = 0.0;
  RngStream init(6, stream_id(StreamKind::Init));
  DnnModelD model(ds, hp, init);
  DnnModelD::Batch batch{{0, 1}, {2, 2}, {4, 3}};
  const double before = model.loss(ds, batch);
  for (auto& b : model.params().group("output").bias) b += 7.25;
  CHECK(model.loss(ds, batch) == doctest::Approx(before).epsilon(1e-9));
}

TEST_CASE("dnn: analytic gradients match finite differences") {
  Dataset ds = toy_dataset();
  HyperParams hp;
  hp.dim = 4;
  hp.seq_len = 3;
  hp.l2 = 0.001;
  RngStream init(7, stream_id(StreamKind::Init));
  DnnModelD model(ds, hp, init);
  // Larger weights move the hidden layer away from the ReLU kinks.
  for (auto& x : model.params().group("item_emb").weights.a) x *= 40.0;
  RngStream neg(8, stream_id(StreamKind::Negatives));
  std::vector<uint32_t> idx(6);
  std::iota(idx.begin(), idx.end(), 0u);
  auto batch = model.make_batch(ds, idx, neg);
  const double err = run_grad_check<DnnModelD, double>(model, ds, batch, 200, 1e-5);
  CHECK(err <= 1e-4);
}

TEST_CASE("sas: zero parameters give 2 ln 2 per supervised position") {
  Dataset ds = toy_dataset();
  HyperParams hp;
  hp.dim = 8;
  hp.seq_len = 4;
  hp.blocks = 1;
  hp.dropout = 0.0;
  RngStream init(9, stream_id(StreamKind::Init));
  SasModelD model(ds, hp, init);
  model.params().fill(0.0);
  SasModelD::Sequence s;
  s.in = {0, 0, 0, 3};
  s.tg = {0, 0, 0, 4};
  s.ng = {0, 0, 0, 5};
  CHECK(model.loss(ds, {s}) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

  SasModelD::Sequence all_pad;
  all_pad.in = {0, 0, 0, 0};
  all_pad.tg = {0, 0, 0, 0};
  all_pad.ng = {0, 0, 0, 0};
  CHECK(model.loss(ds, {all_pad}) == 0.0);
}

TEST_CASE("sas: analytic gradients match finite differences (double)") {
  Dataset ds = toy_dataset();
  HyperParams hp;
  hp.dim = 8;
  hp.seq_len = 4;
  hp.blocks = 1;
  hp.dropout = 0.0;
  RngStream init(10, stream_id(StreamKind::Init));
  SasModelD model(ds, hp, init);
  for (auto& x : model.params().group("item_emb").weights.a) x *= 30.0;
  for (auto& x : model.params().group("pos_emb").weights.a) x *= 30.0;
  RngStream neg(11, stream_id(StreamKind::Negatives));
  std::vector<uint32_t> idx(4);
  std::iota(idx.begin(), idx.end(), 0u);
  auto batch = model.make_batch(ds, idx, neg);
  const double err = run_grad_check<SasModelD, double>(model, ds, batch, 300, 1e-6);
  CHECK(err <= 1e-5);
}

TEST_CASE("sas: analytic gradients match finite differences (float)") {
  Dataset ds = toy_dataset();
  HyperParams hp;
  hp.dim = 8;
  hp.seq_len = 4;
  hp.blocks = 1;
  hp.dropout = 0.0;
  RngStream init(10, stream_id(StreamKind::Init));
  SasModelF model(ds, hp, init);
  for (auto& x : model.params().group("item_emb").weights.a) x *= 30.0f;
  for (auto& x : model.params().group("pos_emb").weights.a) x *= 30.0f;
  RngStream neg(11, stream_id(StreamKind::Negatives));
  std::vector<uint32_t> idx(4);
  std::iota(idx.begin(), idx.end(), 0u);
  auto batch = model.make_batch(ds, idx, neg);
  const double err = run_grad_check<SasModelF, float>(model, ds, batch, 300, 1e-2);
  CHECK(err <= 1e-3);
}

TEST_CASE("sas: 2-block gradients also match finite differences") {
  Dataset ds = toy_dataset();
  HyperParams hp;
  hp.dim = 6;
  hp.seq_len = 4;
  hp.blocks = 2;
  hp.dropout = 0.0;
  RngStream init(12, stream_id(StreamKind::Init));
  SasModelD model(ds, hp, init);
  RngStream neg(13, stream_id(StreamKind::Negatives));
  std::vector<uint32_t> idx(3);
  std::iota(idx.begin(), idx.end(), 0u);
  auto batch = model.make_batch(ds, idx, neg);
  const double err = run_grad_check<SasModelD, double>(model, ds, batch, 200, 1e-6);
  CHECK(err <= 1e-5);
}

TEST_CASE("sas: future positions never change earlier outputs") {
  Dataset ds = toy_dataset();
  HyperParams hp;
  hp.dim = 8;
  hp.seq_len = 5;
  hp.blocks = 2;
  hp.dropout = 0.0;
  RngStream init(14, stream_id(StreamKind::Init));
  SasModelF model(ds, hp, init);

  std::vector<int> a{0, 2, 3, 4, 5};
  std::vector<int> b{0, 2, 3, 4, 6};  // only the last position differs
  auto ha = model.hidden_states(a);
  auto hb = model.hidden_states(b);
  for (int j = 0; j < 4; ++j) {
    REQUIRE(ha[j] == hb[j]);
  }
  CHECK(ha[4] != hb[4]);

  // Zeroing (padding) the future position likewise leaves the past alone.
  std::vector<int> c{0, 2, 3, 4, 0};
  auto hc = model.hidden_states(c);
  for (int j = 0; j < 4; ++j) REQUIRE(ha[j] == hc[j]);
}

TEST_CASE("sas: identical peers score identically after cooperation") {
  Dataset ds = toy_dataset();
  HyperParams hp;
  hp.dim = 8;
  hp.seq_len = 4;
  hp.blocks = 1;
  RngStream init_a(15, stream_id(StreamKind::Init, 0));
  RngStream init_b(15, stream_id(StreamKind::Init, 1));
  SasModelF a(ds, hp, init_a);
  SasModelF b(ds, hp, init_b);
  LwConfig cfg;
  lw_cooperate(a.params(), b.params(), cfg, EntropyConfig{});
  for (int u = 0; u < ds.num_users; ++u) {
    auto sa = a.score_items(ds, u, false);
    auto sb = b.score_items(ds, u, false);
    for (size_t k = 0; k < sa.size(); ++k) {
      REQUIRE(sa[k] == doctest::Approx(sb[k]).epsilon(1e-5));
    }
  }
}
