#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/criteria.hpp"
#include "core/param_set.hpp"
#include "core/rng.hpp"

namespace pcrec {

enum class CoopCriterion { Entropy, L1Relative };

const char* criterion_name(CoopCriterion c);
CoopCriterion criterion_from_name(std::string_view name);

// Which layer-group roles take part in a cooperation pass.
struct Scope {
  bool embedding = true;
  bool middle = true;
  bool softmax = true;

  bool contains(LayerRole role) const {
    switch (role) {
      case LayerRole::Embedding: return embedding;
      case LayerRole::Middle: return middle;
      case LayerRole::Softmax: return softmax;
    }
    return false;
  }
  static Scope all() { return {}; }
  static Scope only(LayerRole role) {
    Scope s{false, false, false};
    switch (role) {
      case LayerRole::Embedding: s.embedding = true; break;
      case LayerRole::Middle: s.middle = true; break;
      case LayerRole::Softmax: s.softmax = true; break;
    }
    return s;
  }
  std::string to_string() const;
  static Scope from_string(std::string_view spec);  // "all" or comma list of roles
};

// Layer-wise cooperation settings. alpha sharpens how strongly the
// better-informed peer dominates the blend.
struct LwConfig {
  double alpha = 30.0;
  CoopCriterion criterion = CoopCriterion::Entropy;
  Scope scope = Scope::all();
};

// Parameter-wise cooperation settings: one global magnitude threshold.
struct PwConfig {
  double gamma = 0.01;
  Scope scope = Scope::all();
};

struct CoopLayerEntry {
  std::string layer;
  // Filled for layer-wise passes (peer-1 perspective; peer-2's coefficient
  // is 1 - mu_self).
  std::optional<double> h_self;
  std::optional<double> h_peer;
  std::optional<double> mu_self;
  // Filled for parameter-wise passes: replacements applied to peer 1.
  long replaced = 0;
};

struct CooperationReport {
  int epoch = 0;
  std::string criterion;  // "entropy", "l1", or "pw"
  std::vector<CoopLayerEntry> layers;
};

// Adaptive blend coefficient 1 / (1 + exp(-alpha * (h_self - h_peer))),
// evaluated with the sign-stable sigmoid and clamped into (0, 1) so a
// saturated blend still keeps a trace of both peers.
double coefficient(double h_self, double h_peer, double alpha);

// Blends every in-scope layer of the two peers:
//   W_self <- mu * W_self + (1 - mu) * W_peer
// with mu from `coefficient` over the configured criterion, computed on
// pre-update snapshots of both peers; bias and normalization vectors reuse
// their layer's mu. Both peers end up with identical in-scope layers.
CooperationReport lw_cooperate(ParamSet<float>& a, ParamSet<float>& b,
                               const LwConfig& cfg, const EntropyConfig& ecfg,
                               int epoch = 0);

// Swaps every below-threshold weight for the peer's value at the same
// position; masks are taken from pre-update snapshots of both peers, so the
// pass is symmetric. Bias and normalization vectors follow the same rule.
CooperationReport pw_cooperate(ParamSet<float>& a, ParamSet<float>& b,
                               const PwConfig& cfg, int epoch = 0);

// Overwrites below-threshold weights with N(0, noise_std^2) draws instead of
// peer values. Returns the number replaced.
long noise_reactivate(ParamSet<float>& model, double gamma, double noise_std,
                      RngStream& rng);

// Element-wise mean of two item-score vectors.
std::vector<float> ensemble_scores(std::span<const float> a, std::span<const float> b);

// Zeroes the floor(fraction * N) smallest-magnitude weights across all
// in-scope weight matrices (auxiliary vectors are untouched), ranking
// globally with ties broken by position. Returns the number zeroed.
long magnitude_prune(ParamSet<float>& model, double fraction, const Scope& scope);

// Appends one row per layer to a cooperation log
// (epoch,layer,criterion,h_self,h_peer,mu_self,replaced_count), writing the
// header first if the file is new or empty.
void append_coop_csv(const std::string& path, const CooperationReport& report);

}  // namespace pcrec
