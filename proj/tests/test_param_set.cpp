#include <filesystem>
#include <fstream>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/param_set.hpp"
#include "core/rng.hpp"
#include "doctest.h"

using namespace pcrec;

namespace {

ParamSet<float> sample_params(uint64_t seed) {
  RngStream rng(seed, 1);
  ParamSet<float> p;
  LayerGroup<float> emb;
  emb.name = "item_emb";
  emb.role = LayerRole::Embedding;
  emb.weights = MatF(5, 4);
  for (float& x : emb.weights.a) x = static_cast<float>(rng.next_double() - 0.5);
  p.groups.push_back(emb);

  LayerGroup<float> mid;
  mid.name = "hidden";
  mid.role = LayerRole::Middle;
  mid.weights = MatF(4, 4);
  mid.bias.assign(4, 0.0f);
  mid.norm_gain.assign(4, 1.0f);
  mid.norm_shift.assign(4, 0.0f);
  for (float& x : mid.weights.a) x = static_cast<float>(rng.next_double() - 0.5);
  for (float& x : mid.bias) x = static_cast<float>(rng.next_double() - 0.5);
  p.groups.push_back(mid);

  LayerGroup<float> out;
  out.name = "output";
  out.role = LayerRole::Softmax;
  out.weights = MatF(5, 4);
  out.bias.assign(5, 0.0f);
  for (float& x : out.weights.a) x = static_cast<float>(rng.next_double() - 0.5);
  p.groups.push_back(out);
  return p;
}

}  // namespace

TEST_CASE("structure comparison and shape cloning") {
  ParamSet<float> a = sample_params(1);
  ParamSet<float> b = sample_params(2);
  CHECK(same_structure(a, b));
  CHECK_NOTHROW(require_same_structure(a, b));

  ParamSet<float> g = clone_shape(a);
  CHECK(same_structure(a, g));
  CHECK(g.total_size() == a.total_size());
  g.for_each_tensor([](LayerGroup<float>&, TensorKind, std::span<float> t) {
    for (float x : t) CHECK(x == 0.0f);
  });

  b.groups[1].weights = MatF(3, 4);
  CHECK(!same_structure(a, b));
  CHECK_THROWS_AS(require_same_structure(a, b), Error);
}

TEST_CASE("flat coordinate access walks every tensor") {
  ParamSet<float> p = sample_params(3);
  const size_t n = p.total_size();
  CHECK(n == 5 * 4 + 4 * 4 + 4 + 4 + 4 + 5 * 4 + 5);
  for (size_t i = 0; i < n; ++i) {
    const float orig = p.get_flat(i);
    p.set_flat(i, orig + 1.0f);
    CHECK(p.get_flat(i) == orig + 1.0f);
    p.set_flat(i, orig);
  }
  CHECK_THROWS_AS(p.get_flat(n), Error);
}

TEST_CASE("checksum reacts to any single-bit change") {
  ParamSet<float> p = sample_params(4);
  const uint64_t before = param_checksum(p);
  CHECK(param_checksum(p) == before);
  p.groups[2].bias[3] += 1e-7f;
  CHECK(param_checksum(p) != before);
}

TEST_CASE("checkpoint round-trips bit-exactly with metadata") {
  ParamSet<float> p = sample_params(5);
  // Include an awkward value: denormal-ish and negative zero.
  p.groups[0].weights.a[0] = -0.0f;
  p.groups[0].weights.a[1] = 1e-38f;
  const std::string dir = "ckpt_test_dir";
  std::filesystem::create_directories(dir);
  const std::string manifest = dir + "/model.best.manifest";
  std::map<std::string, std::string> meta{{"model", "dnn"}, {"seed", "17"},
                                          {"note", "two words"}};
  save_checkpoint(manifest, p, meta);

  std::map<std::string, std::string> meta_in;
  ParamSet<float> q = load_checkpoint(manifest, &meta_in);
  CHECK(meta_in == meta);
  REQUIRE(same_structure(p, q));
  CHECK(param_checksum(p) == param_checksum(q));

  // Saving the loaded set again produces identical bytes.
  const std::string manifest2 = dir + "/model2.best.manifest";
  save_checkpoint(manifest2, q, meta_in);
  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  };
  CHECK(slurp(dir + "/model.best.bin") == slurp(dir + "/model2.best.bin"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("loading a non-checkpoint fails cleanly") {
  const std::string path = "not_a_checkpoint.txt";
  {
    std::ofstream out(path);
    out << "hello\n";
  }
  CHECK_THROWS_AS(load_checkpoint(path), Error);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint("missing_file.manifest"), Error);
}
