#include "ridkit/rng.hpp"

#include <cmath>

namespace ridkit {

namespace {

using u128 = unsigned __int128;

// PCG default 128-bit multiplier.
constexpr u128 pcg_mult() {
  return (u128(0x2360ed051fc65da4ULL) << 64) | 0x4385df649fccf645ULL;
}

inline std::uint64_t rotr64(std::uint64_t v, unsigned rot) {
  return (v >> rot) | (v << ((-rot) & 63u));
}

// splitmix64 finalizer; used to derive child stream ids.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  inc_ = (u128(mix64(stream_id ^ 0xda3e39cb94b95bdbULL)) << 64 |
          mix64(stream_id + 0x353587ca676ca88bULL)) |
         1u;
  state_ = 0;
  state_ = state_ * pcg_mult() + inc_;
  state_ += (u128(mix64(seed)) << 64) | seed;
  state_ = state_ * pcg_mult() + inc_;
}

std::uint64_t RngStream::next_u64() {
  state_ = state_ * pcg_mult() + inc_;
  const std::uint64_t hi = std::uint64_t(state_ >> 64);
  const std::uint64_t lo = std::uint64_t(state_);
  return rotr64(hi ^ lo, unsigned(state_ >> 122));
}

double RngStream::next_unit() {
  return double(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_unit_open() {
  return double((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double RngStream::next_normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u = next_unit_open();
  const double v = next_unit();
  const double r = std::sqrt(-2.0 * std::log(u));
  const double a = 6.28318530717958647693 * v;
  cached_normal_ = r * std::sin(a);
  has_cached_normal_ = true;
  return r * std::cos(a);
}

RngStream RngStream::substream(std::uint64_t block) const {
  // Child identity depends only on (seed, stream_id, block), not on how much
  // of this stream has been consumed.
  return RngStream(seed_, mix64(stream_id_ * 0x9e3779b97f4a7c15ULL + block + 1));
}

}  // namespace ridkit
