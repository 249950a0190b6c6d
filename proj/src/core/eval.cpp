#include "core/eval.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "core/errors.hpp"

namespace pcrec {

const char* split_name(Split s) { return s == Split::Valid ? "valid" : "test"; }

int rank_of_target(std::span<const float> scores, int target_id,
                   const std::vector<uint8_t>& excluded) {
  if (target_id < 1 || static_cast<size_t>(target_id) > scores.size()) {
    data_error("rank_of_target: target id out of range");
  }
  const size_t tidx = static_cast<size_t>(target_id - 1);
  if (!excluded.empty() && excluded[tidx]) {
    data_error("rank_of_target: target is excluded from the candidate set");
  }
  const float ts = scores[tidx];
  int rank = 1;
  for (size_t k = 0; k < scores.size(); ++k) {
    if (k == tidx) continue;
    if (!excluded.empty() && excluded[k]) continue;
    if (scores[k] >= ts) rank += 1;
  }
  return rank;
}

Metrics metrics_at_n(const std::vector<int>& ranks, int n) {
  if (ranks.empty()) config_error("metrics_at_n: empty rank list");
  Metrics m;
  for (int rank : ranks) {
    if (rank < 1) config_error("metrics_at_n: ranks must be >= 1");
    if (rank > n) continue;
    m.hit += 1.0;
    m.mrr += 1.0 / static_cast<double>(rank);
    m.ndcg += 1.0 / std::log2(static_cast<double>(rank) + 1.0);
  }
  const double users = static_cast<double>(ranks.size());
  m.hit /= users;
  m.mrr /= users;
  m.ndcg /= users;
  return m;
}

const Metrics& EvalReport::metrics(int n) const {
  for (const auto& [cutoff, m] : at) {
    if (cutoff == n) return m;
  }
  config_error("no metrics at the requested cutoff");
}

EvalReport evaluate(const ScoreFn& score, const Dataset& ds, Split split,
                    const EvalOptions& opts) {
  EvalReport report;
  report.split = split;
  report.ranks.reserve(static_cast<size_t>(ds.num_users));
  std::vector<uint8_t> excluded(static_cast<size_t>(ds.num_items), 0);
  const bool include_valid = split == Split::Test;

  for (int u = 0; u < ds.num_users; ++u) {
    const int target = split == Split::Valid ? ds.valid[static_cast<size_t>(u)]
                                             : ds.test[static_cast<size_t>(u)];
    std::fill(excluded.begin(), excluded.end(), 0);
    if (opts.exclude_seen) {
      for (int item : ds.train_sets[static_cast<size_t>(u)]) {
        excluded[static_cast<size_t>(item - 1)] = 1;
      }
      if (include_valid) {
        excluded[static_cast<size_t>(ds.valid[static_cast<size_t>(u)] - 1)] = 1;
      }
      // A user may re-consume an item; the target always stays a candidate.
      excluded[static_cast<size_t>(target - 1)] = 0;
    }
    const std::vector<float> scores = score(u, include_valid);
    if (scores.size() != static_cast<size_t>(ds.num_items)) {
      data_error("scorer returned a vector of the wrong length");
    }
    report.ranks.push_back(rank_of_target(scores, target, excluded));
  }

  for (int n : opts.cutoffs) {
    report.at.emplace_back(n, metrics_at_n(report.ranks, n));
  }
  return report;
}

void append_metrics_csv(const std::string& path, const std::string& run_id,
                        const std::string& model_tag, const EvalReport& report) {
  const bool fresh =
      !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) io_error("cannot open metrics log '" + path + "'");
  if (fresh) out << "run_id,model,split,metric,N,value\n";
  char buf[64];
  auto emit = [&](const char* metric, int n, double value) {
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    out << run_id << ',' << model_tag << ',' << split_name(report.split) << ','
        << metric << ',' << n << ',' << buf << '\n';
  };
  for (const auto& [n, m] : report.at) {
    emit("MRR", n, m.mrr);
    emit("HIT", n, m.hit);
    emit("NDCG", n, m.ndcg);
  }
}

}  // namespace pcrec
