#pragma once

#include <cstdint>
#include <vector>

namespace pcrec {

// Seeded random stream on PCG32 (pcg_setseq_64_xsh_rr_32, O'Neill 2014).
// The stream id selects the LCG increment, so streams built from the same
// seed but distinct ids are mutually independent, and any (seed, stream_id)
// pair reproduces the same draw sequence on every platform. All derived
// draws (doubles, bounded ints, gaussians) are built only from the 32-bit
// output, never from libc or std distributions.
class RngStream {
 public:
  RngStream(uint64_t seed, uint64_t stream_id);

  uint64_t seed() const { return seed_; }
  uint64_t stream_id() const { return stream_id_; }

  uint32_t next_u32();
  uint64_t next_u64();

  // Uniform in [0,1) with 53 random bits.
  double next_double();

  // Uniform in [0, bound); bound must be >= 1. Unbiased via rejection.
  uint32_t next_below(uint32_t bound);

  double next_gaussian(double mean, double stddev);

  // In-place Fisher-Yates shuffle.
  template <class V>
  void shuffle(std::vector<V>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = next_below(static_cast<uint32_t>(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_ = 0;
  uint64_t inc_ = 0;
  uint64_t seed_ = 0;
  uint64_t stream_id_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Purpose tags keeping every consumer of randomness on its own stream.
enum class StreamKind : uint64_t {
  Init = 1,
  Shuffle = 2,
  Negatives = 3,
  Dropout = 4,
  Noise = 5,
  Synthetic = 6,
  Probe = 7,
};

// Packs (kind, peer, epoch) into a stream id.
inline uint64_t stream_id(StreamKind kind, uint64_t peer = 0, uint64_t epoch = 0) {
  return (static_cast<uint64_t>(kind) << 48) | (peer << 32) | epoch;
}

}  // namespace pcrec
