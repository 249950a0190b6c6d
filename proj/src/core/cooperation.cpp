#include "core/cooperation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <tuple>

#include "core/errors.hpp"

namespace pcrec {

const char* criterion_name(CoopCriterion c) {
  return c == CoopCriterion::Entropy ? "entropy" : "l1";
}

CoopCriterion criterion_from_name(std::string_view name) {
  if (name == "entropy") return CoopCriterion::Entropy;
  if (name == "l1") return CoopCriterion::L1Relative;
  config_error("unknown criterion '" + std::string(name) + "'");
}

std::string Scope::to_string() const {
  if (embedding && middle && softmax) return "all";
  std::string s;
  auto add = [&](const char* r) {
    if (!s.empty()) s += ',';
    s += r;
  };
  if (embedding) add("embedding");
  if (middle) add("middle");
  if (softmax) add("softmax");
  return s.empty() ? "none" : s;
}

Scope Scope::from_string(std::string_view spec) {
  if (spec == "all" || spec.empty()) return Scope::all();
  Scope s{false, false, false};
  size_t pos = 0;
  while (pos <= spec.size()) {
    size_t comma = spec.find(',', pos);
    if (comma == std::string_view::npos) comma = spec.size();
    std::string_view tok = spec.substr(pos, comma - pos);
    if (tok == "embedding") s.embedding = true;
    else if (tok == "middle") s.middle = true;
    else if (tok == "softmax") s.softmax = true;
    else config_error("unknown scope role '" + std::string(tok) + "'");
    pos = comma + 1;
    if (comma == spec.size()) break;
  }
  return s;
}

double coefficient(double h_self, double h_peer, double alpha) {
  if (!(alpha > 0)) config_error("coefficient: alpha must be positive");
  const double z = alpha * (h_self - h_peer);
  double mu;
  if (z >= 0) {
    mu = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    mu = e / (1.0 + e);
  }
  // Keep strictly inside (0,1) even when the sigmoid saturates.
  const double lo = 1e-300;
  const double hi = 1.0 - 1e-16;
  return std::min(std::max(mu, lo), hi);
}

namespace {

// Collects the in-scope group indices; the two sets must agree structurally.
std::vector<size_t> in_scope_groups(const ParamSet<float>& a, const ParamSet<float>& b,
                                    const Scope& scope) {
  require_same_structure(a, b);
  std::vector<size_t> idx;
  for (size_t i = 0; i < a.groups.size(); ++i) {
    if (scope.contains(a.groups[i].role)) idx.push_back(i);
  }
  if (idx.empty()) config_error("cooperation scope selects no layers of this model");
  return idx;
}

void blend_span(std::span<float> self, std::span<const float> self_old,
                std::span<const float> peer_old, double mu) {
  for (size_t e = 0; e < self.size(); ++e) {
    self[e] = static_cast<float>(mu * static_cast<double>(self_old[e]) +
                                 (1.0 - mu) * static_cast<double>(peer_old[e]));
  }
}

void swap_masked(std::span<float> self, std::span<const float> self_old,
                 std::span<const float> peer_old, const std::vector<uint8_t>& mask,
                 long& replaced) {
  for (size_t e = 0; e < self.size(); ++e) {
    if (mask[e]) {
      self[e] = peer_old[e];
      replaced += 1;
    } else {
      self[e] = self_old[e];
    }
  }
}

}  // namespace

CooperationReport lw_cooperate(ParamSet<float>& a, ParamSet<float>& b,
                               const LwConfig& cfg, const EntropyConfig& ecfg,
                               int epoch) {
  const std::vector<size_t> scope = in_scope_groups(a, b, cfg.scope);

  CooperationReport report;
  report.epoch = epoch;
  report.criterion = criterion_name(cfg.criterion);

  // Criterion values and snapshots come from the pre-update weights of both
  // peers, so the pass is symmetric and independent of layer order.
  std::vector<double> h_a(scope.size()), h_b(scope.size());
  for (size_t s = 0; s < scope.size(); ++s) {
    const auto& ga = a.groups[scope[s]];
    const auto& gb = b.groups[scope[s]];
    if (cfg.criterion == CoopCriterion::Entropy) {
      h_a[s] = entropy(ga.weights, ecfg);
      h_b[s] = entropy(gb.weights, ecfg);
    } else {
      h_a[s] = relative_l1(ga.weights, gb.weights);
      h_b[s] = relative_l1(gb.weights, ga.weights);
    }
  }

  for (size_t s = 0; s < scope.size(); ++s) {
    auto& ga = a.groups[scope[s]];
    auto& gb = b.groups[scope[s]];
    const double mu_a = coefficient(h_a[s], h_b[s], cfg.alpha);
    const double mu_b = coefficient(h_b[s], h_a[s], cfg.alpha);

    const LayerGroup<float> snap_a = ga;
    const LayerGroup<float> snap_b = gb;
    blend_span(ga.weights.flat(), snap_a.weights.flat(), snap_b.weights.flat(), mu_a);
    blend_span(gb.weights.flat(), snap_b.weights.flat(), snap_a.weights.flat(), mu_b);
    blend_span(ga.bias, snap_a.bias, snap_b.bias, mu_a);
    blend_span(gb.bias, snap_b.bias, snap_a.bias, mu_b);
    blend_span(ga.norm_gain, snap_a.norm_gain, snap_b.norm_gain, mu_a);
    blend_span(gb.norm_gain, snap_b.norm_gain, snap_a.norm_gain, mu_b);
    blend_span(ga.norm_shift, snap_a.norm_shift, snap_b.norm_shift, mu_a);
    blend_span(gb.norm_shift, snap_b.norm_shift, snap_a.norm_shift, mu_b);

    CoopLayerEntry entry;
    entry.layer = ga.name;
    entry.h_self = h_a[s];
    entry.h_peer = h_b[s];
    entry.mu_self = mu_a;
    report.layers.push_back(std::move(entry));
  }
  return report;
}

CooperationReport pw_cooperate(ParamSet<float>& a, ParamSet<float>& b,
                               const PwConfig& cfg, int epoch) {
  if (cfg.gamma < 0) config_error("pw_cooperate: gamma must be >= 0");
  const std::vector<size_t> scope = in_scope_groups(a, b, cfg.scope);

  CooperationReport report;
  report.epoch = epoch;
  report.criterion = "pw";

  for (size_t idx : scope) {
    auto& ga = a.groups[idx];
    auto& gb = b.groups[idx];
    const LayerGroup<float> snap_a = ga;
    const LayerGroup<float> snap_b = gb;

    long replaced_a = 0;
    long replaced_b = 0;
    auto run = [&](std::span<float> sa, std::span<float> sb,
                   std::span<const float> oa, std::span<const float> ob) {
      const std::vector<uint8_t> ma = pw_mask(oa, cfg.gamma);
      const std::vector<uint8_t> mb = pw_mask(ob, cfg.gamma);
      swap_masked(sa, oa, ob, ma, replaced_a);
      swap_masked(sb, ob, oa, mb, replaced_b);
    };
    run(ga.weights.flat(), gb.weights.flat(), snap_a.weights.flat(), snap_b.weights.flat());
    run(ga.bias, gb.bias, snap_a.bias, snap_b.bias);
    run(ga.norm_gain, gb.norm_gain, snap_a.norm_gain, snap_b.norm_gain);
    run(ga.norm_shift, gb.norm_shift, snap_a.norm_shift, snap_b.norm_shift);

    CoopLayerEntry entry;
    entry.layer = ga.name;
    entry.replaced = replaced_a;
    report.layers.push_back(std::move(entry));
  }
  return report;
}

long noise_reactivate(ParamSet<float>& model, double gamma, double noise_std,
                      RngStream& rng) {
  if (gamma < 0) config_error("noise_reactivate: gamma must be >= 0");
  if (!(noise_std > 0)) config_error("noise_reactivate: noise_std must be positive");
  long replaced = 0;
  model.for_each_tensor([&](LayerGroup<float>&, TensorKind, std::span<float> t) {
    for (float& w : t) {
      if (std::fabs(static_cast<double>(w)) < gamma) {
        w = static_cast<float>(rng.next_gaussian(0.0, noise_std));
        replaced += 1;
      }
    }
  });
  return replaced;
}

std::vector<float> ensemble_scores(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) config_error("ensemble_scores: score vectors differ in length");
  std::vector<float> out(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    out[i] = static_cast<float>(0.5 * (static_cast<double>(a[i]) + static_cast<double>(b[i])));
  }
  return out;
}

long magnitude_prune(ParamSet<float>& model, double fraction, const Scope& scope) {
  if (fraction < 0 || fraction > 1) {
    config_error("magnitude_prune: fraction must lie in [0,1]");
  }
  struct Entry {
    float mag;
    uint32_t group;
    uint32_t elem;
  };
  std::vector<Entry> entries;
  for (size_t gi = 0; gi < model.groups.size(); ++gi) {
    const auto& g = model.groups[gi];
    if (!scope.contains(g.role) || g.weights.empty()) continue;
    const auto w = g.weights.flat();
    for (size_t e = 0; e < w.size(); ++e) {
      entries.push_back({std::fabs(w[e]), static_cast<uint32_t>(gi),
                         static_cast<uint32_t>(e)});
    }
  }
  const long count = static_cast<long>(std::floor(fraction * static_cast<double>(entries.size())));
  if (count <= 0) return 0;
  std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
    return std::tie(x.mag, x.group, x.elem) < std::tie(y.mag, y.group, y.elem);
  });
  for (long i = 0; i < count; ++i) {
    model.groups[entries[static_cast<size_t>(i)].group]
        .weights.a[entries[static_cast<size_t>(i)].elem] = 0.0f;
  }
  return count;
}

void append_coop_csv(const std::string& path, const CooperationReport& report) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) io_error("cannot open cooperation log '" + path + "'");
  if (fresh) out << "epoch,layer,criterion,h_self,h_peer,mu_self,replaced_count\n";
  char buf[64];
  auto fmt = [&](const std::optional<double>& v) -> std::string {
    if (!v) return "";
    std::snprintf(buf, sizeof(buf), "%.10g", *v);
    return buf;
  };
  for (const auto& e : report.layers) {
    out << report.epoch << ',' << e.layer << ',' << report.criterion << ','
        << fmt(e.h_self) << ',' << fmt(e.h_peer) << ',' << fmt(e.mu_self) << ','
        << e.replaced << '\n';
  }
}

}  // namespace pcrec
