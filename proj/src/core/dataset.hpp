#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "core/rng.hpp"

namespace pcrec {

// Implicit-feedback interactions after ingestion: dense ids (users 0..U-1,
// items 1..I with 0 reserved for padding), per-user chronological lists and
// a leave-one-out split (last item test, second-to-last validation, rest
// train). Immutable once built.
struct Dataset {
  int num_users = 0;
  int num_items = 0;  // real items; scores/vectors index item id k at k-1
  std::vector<std::vector<int>> train;  // per user, chronological, may repeat
  std::vector<int> valid;               // per user
  std::vector<int> test;                // per user
  std::vector<long long> user_ids;      // original ids, index = dense id
  std::vector<long long> item_ids;      // original ids, index = dense id - 1

  // Sorted unique train items per user, for negative sampling and ranking
  // exclusion.
  std::vector<std::vector<int>> train_sets;

  size_t train_interactions() const {
    size_t n = 0;
    for (const auto& t : train) n += t.size();
    return n;
  }
  bool in_train(int user, int item) const;
};

// Reads one interaction per line (user<TAB>item<TAB>timestamp, integer
// fields), applies iterative 5-core filtering (users keep >= 5 interactions,
// items keep >= 5 distinct users) until stable, orders every user's items by
// timestamp (stable on ties), remaps ids densely and splits leave-one-out.
Dataset ingest(const std::string& path);
Dataset ingest_stream(std::istream& in, const std::string& origin);

// Writes a dataset back out in the same TSV format with dense ids and
// per-user timestamps 0,1,2,...; re-ingesting the result is a fixed point.
void write_dataset_tsv(const Dataset& ds, const std::string& path);

// Left-pads each user's train list to length t with item 0; lists longer
// than t are split into consecutive length-t chunks (the final partial chunk
// left-padded). Order follows users, then chunks.
std::vector<std::vector<int>> build_sequences(const Dataset& ds, int t);

struct ShuffleOrder {
  int epoch = 0;
  uint64_t seed = 0;
  std::vector<uint32_t> perm;
};

// Fisher-Yates permutation of [0, n), reproducible from (seed, epoch).
ShuffleOrder shuffled_epoch(size_t n, uint64_t seed, int epoch);

struct BprTriple {
  int user;
  int pos;
  int neg;
};

// u uniform over users with train items, pos uniform over u's train list,
// neg uniform over items outside u's train set (bounded rejection; users
// holding the whole catalog are skipped).
std::vector<BprTriple> sample_bpr_triples(const Dataset& ds, size_t count, RngStream& rng);

}  // namespace pcrec
