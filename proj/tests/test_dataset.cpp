#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "core/dataset.hpp"
#include "core/synthetic.hpp"
#include "doctest.h"

using namespace pcrec;

namespace {

// 6 users x 6 items, every user saw every item, timestamps follow item id.
std::string grid_tsv() {
  std::ostringstream out;
  for (int u = 1; u <= 6; ++u) {
    for (int i = 1; i <= 6; ++i) out << u * 10 << '\t' << i * 100 << '\t' << i << '\n';
  }
  return out.str();
}

}  // namespace

TEST_CASE("ingest keeps a full grid intact and splits leave-one-out") {
  std::istringstream in(grid_tsv());
  Dataset ds = ingest_stream(in, "grid");
  CHECK(ds.num_users == 6);
  CHECK(ds.num_items == 6);
  for (int u = 0; u < 6; ++u) {
    // Items were remapped in original-id order, so chronological = 1..6.
    CHECK(ds.train[u] == std::vector<int>{1, 2, 3, 4});
    CHECK(ds.valid[u] == 5);
    CHECK(ds.test[u] == 6);
  }
  CHECK(ds.train_interactions() == 24);
  CHECK(ds.in_train(0, 3));
  CHECK(!ds.in_train(0, 6));
}

TEST_CASE("ingest rejects undersized data via 5-core") {
  // One user with 5 items: each item has a single user, so everything drops.
  std::istringstream in("1\t1\t1\n1\t2\t2\n1\t3\t3\n1\t4\t4\n1\t5\t5\n");
  CHECK_THROWS_AS(ingest_stream(in, "tiny"), Error);
}

TEST_CASE("5-core filtering iterates until stable") {
  // The grid plus one extra user with 5 interactions on otherwise-rare
  // items: dropping those items leaves the extra user under 5, and removing
  // that user must not disturb the grid.
  std::ostringstream out;
  out << grid_tsv();
  for (int i = 0; i < 5; ++i) out << 999 << '\t' << 9000 + i << '\t' << i << '\n';
  std::istringstream in(out.str());
  Dataset ds = ingest_stream(in, "grid+tail");
  CHECK(ds.num_users == 6);
  CHECK(ds.num_items == 6);
}

TEST_CASE("duplicate timestamps preserve input order") {
  std::ostringstream out;
  // Grid to keep everything 5-core, then one user whose items share ts 0.
  for (int u = 1; u <= 6; ++u) {
    for (int i = 1; i <= 6; ++i) out << u << '\t' << i << "\t0\n";
  }
  std::istringstream in(out.str());
  Dataset ds = ingest_stream(in, "ties");
  for (int u = 0; u < 6; ++u) {
    CHECK(ds.train[u] == std::vector<int>{1, 2, 3, 4});
    CHECK(ds.valid[u] == 5);
    CHECK(ds.test[u] == 6);
  }
}

TEST_CASE("malformed lines are reported with their number") {
  std::istringstream in("1\t2\t3\nnot-a-line\n");
  try {
    ingest_stream(in, "bad");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("bad:2") != std::string::npos);
  }
}

TEST_CASE("build_sequences pads and chunks") {
  Dataset ds;
  ds.num_users = 2;
  ds.num_items = 9;
  ds.train = {{3, 7}, {1, 2, 3, 4, 5, 6, 7, 8, 9}};
  ds.valid = {1, 1};
  ds.test = {2, 2};
  ds.train_sets = {{3, 7}, {1, 2, 3, 4, 5, 6, 7, 8, 9}};

  auto seqs = build_sequences(ds, 4);
  REQUIRE(seqs.size() == 4);
  CHECK(seqs[0] == std::vector<int>{0, 0, 3, 7});
  CHECK(seqs[1] == std::vector<int>{1, 2, 3, 4});
  CHECK(seqs[2] == std::vector<int>{5, 6, 7, 8});
  CHECK(seqs[3] == std::vector<int>{0, 0, 0, 9});
  for (const auto& s : seqs) CHECK(s.size() == 4);

  // No training interaction is lost or invented.
  std::multiset<int> got, want;
  for (const auto& s : seqs) {
    for (int x : s) {
      if (x != 0) got.insert(x);
    }
  }
  for (const auto& items : ds.train) want.insert(items.begin(), items.end());
  CHECK(got == want);

  CHECK_THROWS_AS(build_sequences(ds, 1), Error);
}

TEST_CASE("shuffled_epoch is reproducible and seed/epoch sensitive") {
  ShuffleOrder a = shuffled_epoch(500, 11, 3);
  ShuffleOrder b = shuffled_epoch(500, 11, 3);
  CHECK(a.perm == b.perm);
  CHECK(shuffled_epoch(500, 12, 3).perm != a.perm);
  CHECK(shuffled_epoch(500, 11, 4).perm != a.perm);

  std::vector<uint32_t> sorted = a.perm;
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 0; i < sorted.size(); ++i) REQUIRE(sorted[i] == i);
}

TEST_CASE("bpr triples avoid train items and reproduce under a fixed seed") {
  std::istringstream in(grid_tsv());
  Dataset ds = ingest_stream(in, "grid");
  RngStream rng(99, stream_id(StreamKind::Negatives));
  auto triples = sample_bpr_triples(ds, 100000, rng);
  REQUIRE(triples.size() > 99000);
  std::map<int, int> pos_count;
  for (const auto& t : triples) {
    REQUIRE(!ds.in_train(t.user, t.neg));
    REQUIRE(ds.in_train(t.user, t.pos));
    if (t.user == 0) pos_count[t.pos] += 1;
  }
  // Positive items are drawn uniformly from each user's 4 train items.
  double total = 0;
  for (const auto& [item, c] : pos_count) total += c;
  for (const auto& [item, c] : pos_count) {
    CHECK(c / total == doctest::Approx(0.25).epsilon(0.05));
  }

  RngStream rng2(99, stream_id(StreamKind::Negatives));
  auto triples2 = sample_bpr_triples(ds, 1000, rng2);
  for (size_t i = 0; i < triples2.size(); ++i) {
    REQUIRE(triples2[i].user == triples[i].user);
    REQUIRE(triples2[i].pos == triples[i].pos);
    REQUIRE(triples2[i].neg == triples[i].neg);
  }
}

TEST_CASE("synthetic data survives ingestion and re-ingestion is a fixed point") {
  const std::string path = "synth_test.tsv";
  SynthConfig cfg;
  cfg.users = 60;
  cfg.items = 40;
  cfg.clusters = 4;
  cfg.seed = 5;
  write_synthetic(path, cfg);
  Dataset ds = ingest(path);
  CHECK(ds.num_users == 60);
  CHECK(ds.num_items == 40);
  for (int u = 0; u < ds.num_users; ++u) {
    CHECK(ds.train[u].size() >= 3);
  }

  const std::string echo = "synth_echo.tsv";
  write_dataset_tsv(ds, echo);
  Dataset ds2 = ingest(echo);
  CHECK(ds2.num_users == ds.num_users);
  CHECK(ds2.num_items == ds.num_items);
  CHECK(ds2.train == ds.train);
  CHECK(ds2.valid == ds.valid);
  CHECK(ds2.test == ds.test);
  std::filesystem::remove(path);
  std::filesystem::remove(echo);
}
