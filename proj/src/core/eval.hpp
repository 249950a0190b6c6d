#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "core/dataset.hpp"

namespace pcrec {

enum class Split { Valid, Test };

const char* split_name(Split s);

// Rank of the target among non-excluded items, ties counted against the
// target: 1 + |{j : score[j] >= score[target], j != target, not excluded}|.
// `scores[k]` holds item id k+1; `excluded` is indexed the same way and must
// not cover the target.
int rank_of_target(std::span<const float> scores, int target_id,
                   const std::vector<uint8_t>& excluded);

struct Metrics {
  double mrr = 0.0;
  double hit = 0.0;
  double ndcg = 0.0;
};

// Averages per-user metrics at cutoff n: HIT = [rank <= n], MRR = 1/rank,
// NDCG = 1/log2(rank+1), each zero beyond the cutoff.
Metrics metrics_at_n(const std::vector<int>& ranks, int n);

struct EvalOptions {
  bool exclude_seen = true;          // drop history items from the candidate set
  std::vector<int> cutoffs{5, 20};
};

struct EvalReport {
  Split split = Split::Valid;
  std::vector<int> ranks;                          // one per user
  std::vector<std::pair<int, Metrics>> at;         // (cutoff, metrics)

  const Metrics& metrics(int n) const;
  double mrr_at(int n) const { return metrics(n).mrr; }
};

// Scores all items for one user; `include_valid` asks for the validation
// item to be appended to the history context (used by the test split).
using ScoreFn = std::function<std::vector<float>(int user, bool include_valid)>;

// Ranks every user's held-out target against the catalog. The candidate set
// excludes the context items (train for the validation split, train plus the
// validation item for test) unless exclude_seen is off; a repeated target is
// never excluded. Deterministic given the scorer and dataset.
EvalReport evaluate(const ScoreFn& score, const Dataset& ds, Split split,
                    const EvalOptions& opts = {});

// CSV rows: run_id,model,split,metric,N,value (header written when the file
// is new or empty).
void append_metrics_csv(const std::string& path, const std::string& run_id,
                        const std::string& model_tag, const EvalReport& report);

}  // namespace pcrec
