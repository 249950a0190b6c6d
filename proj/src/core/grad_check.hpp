#pragma once

#include <algorithm>
#include <cmath>

#include "core/param_set.hpp"
#include "core/rng.hpp"

namespace pcrec {

// Central-difference check of hand-derived gradients.
//
// `loss` is a nullary callable returning double; it must read `params` in
// place and be deterministic (fixed negatives, dropout off). `analytic` holds
// the gradient of that loss, shaped like `params`. probe_count coordinates
// are sampled uniformly over the flattened parameter vector; the returned
// value is the worst per-coordinate error
//
//   |numeric - analytic| / max(1, |numeric|, |analytic|)
//
// i.e. relative for large gradients, absolute below magnitude 1, the usual
// mixed metric so near-zero coordinates are not dominated by roundoff.
template <class T, class LossFn>
double grad_check(LossFn&& loss, ParamSet<T>& params, const ParamSet<T>& analytic,
                  int probe_count, double h, RngStream& rng) {
  if (!(h > 0)) config_error("grad_check: step size must be positive");
  const size_t n = params.total_size();
  if (n == 0) config_error("grad_check: empty parameter set");
  double worst = 0.0;
  for (int p = 0; p < probe_count; ++p) {
    const size_t idx = rng.next_below(static_cast<uint32_t>(n));
    const T orig = params.get_flat(idx);
    const T wp = static_cast<T>(static_cast<double>(orig) + h);
    const T wm = static_cast<T>(static_cast<double>(orig) - h);
    params.set_flat(idx, wp);
    const double lp = loss();
    params.set_flat(idx, wm);
    const double lm = loss();
    params.set_flat(idx, orig);
    // Use the realized step so dtype rounding of orig+-h does not bias the
    // difference quotient.
    const double denom = static_cast<double>(wp) - static_cast<double>(wm);
    const double numeric = (lp - lm) / denom;
    const double ana = static_cast<double>(analytic.get_flat(idx));
    const double scale = std::max({1.0, std::fabs(numeric), std::fabs(ana)});
    worst = std::max(worst, std::fabs(numeric - ana) / scale);
  }
  return worst;
}

}  // namespace pcrec
