#include "core/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "core/errors.hpp"

namespace pcrec {

namespace {

struct RawInteraction {
  long long user;
  long long item;
  long long ts;
  size_t line;  // input order, for stable timestamp ties
};

long long parse_ll(std::string_view tok, const std::string& origin, size_t line_no) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    data_error(origin + ":" + std::to_string(line_no) + ": malformed integer field '" +
               std::string(tok) + "'");
  }
  return v;
}

}  // namespace

bool Dataset::in_train(int user, int item) const {
  const auto& s = train_sets[static_cast<size_t>(user)];
  return std::binary_search(s.begin(), s.end(), item);
}

Dataset ingest_stream(std::istream& in, const std::string& origin) {
  std::vector<RawInteraction> rows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const size_t t1 = line.find('\t');
    const size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
      data_error(origin + ":" + std::to_string(line_no) +
                 ": expected user<TAB>item<TAB>timestamp");
    }
    std::string_view sv(line);
    RawInteraction r;
    r.user = parse_ll(sv.substr(0, t1), origin, line_no);
    r.item = parse_ll(sv.substr(t1 + 1, t2 - t1 - 1), origin, line_no);
    r.ts = parse_ll(sv.substr(t2 + 1), origin, line_no);
    r.line = line_no;
    rows.push_back(r);
  }
  if (rows.empty()) data_error(origin + ": no interactions found");

  // Iterative 5-core: drop users with < 5 interactions and items with < 5
  // distinct users until nothing changes.
  std::vector<char> keep(rows.size(), 1);
  for (;;) {
    std::unordered_map<long long, long long> user_count;
    std::unordered_map<long long, std::unordered_set<long long>> item_users;
    for (size_t i = 0; i < rows.size(); ++i) {
      if (!keep[i]) continue;
      user_count[rows[i].user] += 1;
      item_users[rows[i].item].insert(rows[i].user);
    }
    bool changed = false;
    for (size_t i = 0; i < rows.size(); ++i) {
      if (!keep[i]) continue;
      if (user_count[rows[i].user] < 5 ||
          item_users[rows[i].item].size() < 5) {
        keep[i] = 0;
        changed = true;
      }
    }
    if (!changed) break;
  }

  std::vector<RawInteraction> kept;
  for (size_t i = 0; i < rows.size(); ++i) {
    if (keep[i]) kept.push_back(rows[i]);
  }
  if (kept.empty()) {
    data_error(origin + ": empty dataset after 5-core filtering");
  }

  // Dense ids ordered by original id, so the mapping is reproducible.
  std::map<long long, int> user_map;
  std::map<long long, int> item_map;
  for (const auto& r : kept) {
    user_map.emplace(r.user, 0);
    item_map.emplace(r.item, 0);
  }
  Dataset ds;
  for (auto& [orig, dense] : user_map) {
    dense = ds.num_users++;
    ds.user_ids.push_back(orig);
  }
  for (auto& [orig, dense] : item_map) {
    dense = ++ds.num_items;  // items start at 1; 0 is padding
    ds.item_ids.push_back(orig);
  }

  std::vector<std::vector<RawInteraction>> per_user(static_cast<size_t>(ds.num_users));
  for (const auto& r : kept) {
    per_user[static_cast<size_t>(user_map[r.user])].push_back(r);
  }
  ds.train.resize(static_cast<size_t>(ds.num_users));
  ds.valid.resize(static_cast<size_t>(ds.num_users));
  ds.test.resize(static_cast<size_t>(ds.num_users));
  ds.train_sets.resize(static_cast<size_t>(ds.num_users));
  for (int u = 0; u < ds.num_users; ++u) {
    auto& list = per_user[static_cast<size_t>(u)];
    std::stable_sort(list.begin(), list.end(),
                     [](const RawInteraction& a, const RawInteraction& b) {
                       return a.ts < b.ts;
                     });
    std::vector<int> items;
    items.reserve(list.size());
    for (const auto& r : list) items.push_back(item_map[r.item]);
    // 5-core guarantees >= 5 items, so train keeps >= 3 after the split.
    ds.test[static_cast<size_t>(u)] = items.back();
    items.pop_back();
    ds.valid[static_cast<size_t>(u)] = items.back();
    items.pop_back();
    ds.train[static_cast<size_t>(u)] = std::move(items);

    auto& set = ds.train_sets[static_cast<size_t>(u)];
    set = ds.train[static_cast<size_t>(u)];
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
  }
  return ds;
}

Dataset ingest(const std::string& path) {
  std::ifstream in(path);
  if (!in) io_error("cannot open interaction file '" + path + "'");
  return ingest_stream(in, path);
}

void write_dataset_tsv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) io_error("cannot write '" + path + "'");
  for (int u = 0; u < ds.num_users; ++u) {
    long long ts = 0;
    for (int item : ds.train[static_cast<size_t>(u)]) {
      out << (u + 1) << '\t' << item << '\t' << ts++ << '\n';
    }
    out << (u + 1) << '\t' << ds.valid[static_cast<size_t>(u)] << '\t' << ts++ << '\n';
    out << (u + 1) << '\t' << ds.test[static_cast<size_t>(u)] << '\t' << ts++ << '\n';
  }
  if (!out) io_error("short write to '" + path + "'");
}

std::vector<std::vector<int>> build_sequences(const Dataset& ds, int t) {
  if (t < 2) config_error("sequence length must be >= 2");
  std::vector<std::vector<int>> out;
  for (const auto& items : ds.train) {
    size_t pos = 0;
    while (pos < items.size()) {
      const size_t take = std::min(items.size() - pos, static_cast<size_t>(t));
      std::vector<int> seq(static_cast<size_t>(t), 0);
      std::copy(items.begin() + static_cast<long>(pos),
                items.begin() + static_cast<long>(pos + take),
                seq.end() - static_cast<long>(take));
      out.push_back(std::move(seq));
      pos += take;
    }
  }
  return out;
}

ShuffleOrder shuffled_epoch(size_t n, uint64_t seed, int epoch) {
  ShuffleOrder order;
  order.epoch = epoch;
  order.seed = seed;
  order.perm.resize(n);
  for (size_t i = 0; i < n; ++i) order.perm[i] = static_cast<uint32_t>(i);
  RngStream rng(seed, stream_id(StreamKind::Shuffle, 0, static_cast<uint64_t>(epoch)));
  rng.shuffle(order.perm);
  return order;
}

std::vector<BprTriple> sample_bpr_triples(const Dataset& ds, size_t count, RngStream& rng) {
  std::vector<BprTriple> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    const int u = static_cast<int>(rng.next_below(static_cast<uint32_t>(ds.num_users)));
    const auto& items = ds.train[static_cast<size_t>(u)];
    if (items.empty()) continue;
    const int pos = items[rng.next_below(static_cast<uint32_t>(items.size()))];
    int neg = -1;
    for (int attempt = 0; attempt < 100; ++attempt) {
      const int cand = 1 + static_cast<int>(rng.next_below(static_cast<uint32_t>(ds.num_items)));
      if (!ds.in_train(u, cand)) {
        neg = cand;
        break;
      }
    }
    if (neg < 0) continue;  // user holds (nearly) the whole catalog
    out.push_back({u, pos, neg});
  }
  return out;
}

}  // namespace pcrec
