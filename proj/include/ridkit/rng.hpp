#pragma once

#include <cstdint>

namespace ridkit {

// Counter-free splittable PRNG: PCG64 (XSL-RR output permutation on a
// 128-bit LCG).  A (seed, stream_id) pair fully determines the sequence, so
// every experiment is reproducible from the numbers it logs.  substream()
// derives an independent child stream deterministically, which is what keeps
// multi-worker Monte Carlo runs byte-identical regardless of thread count.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t next_u64();
  // Uniform on [0,1), 53-bit resolution.
  double next_unit();
  // Uniform on (0,1]; safe as a log() argument.
  double next_unit_open();
  // Standard normal via Box-Muller (second value cached).
  double next_normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Child stream for block `block`; independent of this stream's position.
  RngStream substream(std::uint64_t block) const;

 private:
  unsigned __int128 state_;
  unsigned __int128 inc_;
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace ridkit
