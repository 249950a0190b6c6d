#include "core/rng.hpp"

#include <cmath>

namespace pcrec {

namespace {
constexpr uint64_t kPcgMult = 6364136223846793005ULL;
}

RngStream::RngStream(uint64_t seed, uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  inc_ = (stream_id << 1u) | 1u;
  state_ = 0;
  next_u32();
  state_ += seed;
  next_u32();
}

uint32_t RngStream::next_u32() {
  uint64_t old = state_;
  state_ = old * kPcgMult + inc_;
  uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
  uint32_t rot = static_cast<uint32_t>(old >> 59u);
  return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
}

uint64_t RngStream::next_u64() {
  uint64_t hi = next_u32();
  uint64_t lo = next_u32();
  return (hi << 32) | lo;
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint32_t RngStream::next_below(uint32_t bound) {
  // pcg32_boundedrand: reject the low region that would bias the modulus.
  uint32_t threshold = (0u - bound) % bound;
  for (;;) {
    uint32_t r = next_u32();
    if (r >= threshold) return r % bound;
  }
}

double RngStream::next_gaussian(double mean, double stddev) {
  if (has_spare_) {
    has_spare_ = false;
    return mean + spare_ * stddev;
  }
  // Box-Muller; u is kept away from 0 so log stays finite.
  double u = 1.0 - next_double();
  double v = next_double();
  double r = std::sqrt(-2.0 * std::log(u));
  double theta = 2.0 * 3.14159265358979323846 * v;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return mean + r * std::cos(theta) * stddev;
}

}  // namespace pcrec
