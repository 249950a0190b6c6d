#include "core/synthetic.hpp"

#include <fstream>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace pcrec {

void write_synthetic(const std::string& path, const SynthConfig& cfg) {
  if (cfg.users <= 0 || cfg.items <= 0 || cfg.clusters <= 0 ||
      cfg.items < cfg.clusters || cfg.min_len < 5 || cfg.max_len < cfg.min_len) {
    config_error("synthetic generator: inconsistent configuration");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) io_error("cannot write '" + path + "'");

  RngStream rng(cfg.seed, stream_id(StreamKind::Synthetic));
  const int per_cluster = cfg.items / cfg.clusters;

  for (int u = 0; u < cfg.users; ++u) {
    const int cluster = u % cfg.clusters;
    const int base = cluster * per_cluster;  // items base+1 .. base+per_cluster
    const int len = cfg.min_len +
                    static_cast<int>(rng.next_below(
                        static_cast<uint32_t>(cfg.max_len - cfg.min_len + 1)));
    int offset = static_cast<int>(rng.next_below(static_cast<uint32_t>(per_cluster)));
    for (int step = 0; step < len; ++step) {
      int item;
      const double roll = rng.next_double();
      if (roll < cfg.p_ring) {
        offset = (offset + 1) % per_cluster;
        item = base + offset + 1;
      } else if (roll < cfg.p_ring + cfg.p_cluster) {
        offset = static_cast<int>(rng.next_below(static_cast<uint32_t>(per_cluster)));
        item = base + offset + 1;
      } else {
        item = 1 + static_cast<int>(rng.next_below(static_cast<uint32_t>(cfg.items)));
      }
      out << (u + 1) << '\t' << item << '\t' << step << '\n';
    }
  }
  if (!out) io_error("short write to '" + path + "'");
}

}  // namespace pcrec
