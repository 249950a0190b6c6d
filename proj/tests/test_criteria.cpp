#include <algorithm>
#include <cmath>
#include <vector>

#include "core/criteria.hpp"
#include "core/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace pcrec;

namespace {

MatF random_mat(int rows, int cols, RngStream& rng, double scale = 1.0) {
  MatF m(rows, cols);
  for (float& x : m.a) x = static_cast<float>((rng.next_double() * 2.0 - 1.0) * scale);
  return m;
}

ParamSet<float> model_with_layers(const std::vector<MatF>& mats) {
  ParamSet<float> p;
  for (size_t i = 0; i < mats.size(); ++i) {
    LayerGroup<float> g;
    g.name = "layer" + std::to_string(i);
    g.role = LayerRole::Middle;
    g.weights = mats[i];
    p.groups.push_back(std::move(g));
  }
  return p;
}

}  // namespace

TEST_CASE("layer_l1 hand cases and homogeneity") {
  MatF zero(3, 3);
  CHECK(layer_l1(zero) == 0.0);

  MatF m(2, 2);
  m.a = {1, -2, 3, -4};
  CHECK(layer_l1(m) == doctest::Approx(10.0));

  MatF scaled = m;
  for (float& x : scaled.a) x *= 2.5f;
  CHECK(layer_l1(scaled) == doctest::Approx(25.0));
}

TEST_CASE("relative_l1 arithmetic and complementarity") {
  MatF a(1, 2), b(1, 2);
  a.a = {1.5f, 1.5f};  // L1 = 3
  b.a = {0.5f, 0.5f};  // L1 = 1
  CHECK(relative_l1(a, b) == doctest::Approx(0.75));
  CHECK(relative_l1(b, a) == doctest::Approx(0.25));
  CHECK(relative_l1(a, a) == doctest::Approx(0.5));

  MatF z(1, 2);
  CHECK(relative_l1(z, z) == 0.5);

  RngStream rng(11, 2);
  for (int t = 0; t < 50; ++t) {
    MatF x = random_mat(4, 5, rng);
    MatF y = random_mat(4, 5, rng);
    CHECK(relative_l1(x, y) + relative_l1(y, x) == doctest::Approx(1.0).epsilon(1e-12));
  }

  MatF mis(2, 2);
  CHECK_THROWS_AS(relative_l1(a, mis), Error);
}

TEST_CASE("entropy hand histogram case") {
  MatF m(1, 4);
  m.a = {0, 1, 2, 3};
  EntropyConfig cfg;
  cfg.bins = 2;
  CHECK(entropy(m, cfg) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("entropy degenerate and bounded") {
  EntropyConfig cfg;
  MatF constant(5, 5);
  for (float& x : constant.a) x = 0.7f;
  CHECK(entropy(constant, cfg) == 0.0);

  RngStream rng(3, 5);
  for (int t = 0; t < 20; ++t) {
    MatF m = random_mat(8, 8, rng);
    CHECK(entropy(m, cfg) <= std::log(static_cast<double>(cfg.bins)) + 1e-12);
    CHECK(entropy(m, cfg) >= 0.0);
  }
}

TEST_CASE("entropy equals histogram oracle exactly on random matrices") {
  RngStream rng(17, 4);
  const int bins[] = {2, 10, 100};
  for (int t = 0; t < 100; ++t) {
    const int r = 1 + static_cast<int>(rng.next_below(64));
    const int c = 1 + static_cast<int>(rng.next_below(64));
    MatF m = random_mat(r, c, rng, 2.0);
    EntropyConfig cfg;
    cfg.bins = bins[t % 3];
    const double got = entropy(m, cfg);
    const double want = oracle::entropy(std::span<const float>(m.flat()), cfg.bins);
    REQUIRE(got == want);
  }
}

TEST_CASE("entropy is permutation invariant") {
  RngStream rng(19, 6);
  MatF m = random_mat(6, 7, rng);
  EntropyConfig cfg;
  const double before = entropy(m, cfg);
  std::vector<float> shuffled = m.a;
  RngStream shuffler(20, 7);
  shuffler.shuffle(shuffled);
  MatF p(7, 6);
  p.a = shuffled;
  CHECK(entropy(p, cfg) == before);
}

TEST_CASE("pw_mask thresholding") {
  MatF w(1, 3);
  w.a = {0.5f, 0.01f, -0.3f};
  auto mask = pw_mask(w, 0.1);
  CHECK(mask == std::vector<uint8_t>{0, 1, 0});

  auto none = pw_mask(w, 0.0);
  CHECK(std::count(none.begin(), none.end(), 1) == 0);

  auto all = pw_mask(w, 0.6);
  CHECK(std::count(all.begin(), all.end(), 1) == 3);

  RngStream rng(23, 8);
  for (int t = 0; t < 50; ++t) {
    MatF m = random_mat(9, 9, rng);
    const double gamma = rng.next_double();
    REQUIRE(pw_mask(m, gamma) == oracle::pw_mask(std::span<const float>(m.flat()), gamma));
  }
}

TEST_CASE("invalid_layer_ratio counts entropy-poor layers") {
  RngStream rng(29, 9);
  std::vector<MatF> mats;
  for (int i = 0; i < 8; ++i) mats.push_back(random_mat(8, 8, rng));
  for (int i = 0; i < 2; ++i) {
    MatF flat(8, 8);
    for (float& x : flat.a) x = 1.0f;
    mats.push_back(flat);
  }
  ParamSet<float> model = model_with_layers(mats);
  EntropyConfig cfg;
  CHECK(invalid_layer_ratio(model, 0.5, cfg) == doctest::Approx(0.2));
  CHECK(invalid_layer_ratio(model, 0.0, cfg) == 0.0);

  ParamSet<float> constant = model_with_layers({mats[8], mats[9]});
  CHECK(invalid_layer_ratio(constant, 0.5, cfg) == 1.0);

  // Monotone in the threshold.
  double prev = -1.0;
  for (double thr : {0.0, 0.5, 1.0, 2.0, 4.0, 6.0}) {
    double r = invalid_layer_ratio(model, thr, cfg);
    CHECK(r >= prev);
    prev = r;
  }

  ParamSet<float> empty;
  CHECK_THROWS_AS(invalid_layer_ratio(empty, 0.5, cfg), Error);
}
