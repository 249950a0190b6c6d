#pragma once

#include <cstdint>
#include <string>

namespace pcrec {

// Synthetic implicit-feedback generator used by tests and the bundled
// experiments. Users and items are grouped into clusters; each user mostly
// walks a ring inside the own cluster's items, so the data carries both a
// latent (cluster) structure learnable by factorization models and a
// sequential (successor) structure learnable by attention models.
struct SynthConfig {
  int users = 1000;
  int items = 500;
  int clusters = 20;
  int min_len = 15;
  int max_len = 30;
  double p_ring = 0.6;      // step to the next item on the cluster ring
  double p_cluster = 0.25;  // random item inside the cluster
  uint64_t seed = 1;
};

// Writes user<TAB>item<TAB>timestamp lines; ids are 1-based, timestamps
// count 0,1,2,... per user.
void write_synthetic(const std::string& path, const SynthConfig& cfg);

}  // namespace pcrec
