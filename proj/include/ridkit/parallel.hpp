#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

#include "ridkit/rng.hpp"

namespace ridkit {

// Deterministic block-parallel Monte Carlo driver.  Work is cut into
// fixed-size blocks; block b always runs with base.substream(b) regardless of
// which worker picks it up, so results are a pure function of (seed, trials)
// and identical for any worker count.  `fn` is called as
// fn(block_index, first_trial, count, RngStream&) and must only write to
// storage owned by its block.
template <typename Fn>
void run_blocks(std::uint64_t trials, std::uint64_t block_size,
                unsigned workers, const RngStream& base, Fn&& fn) {
  if (trials == 0) return;
  if (block_size == 0) block_size = 1;
  const std::uint64_t blocks = (trials + block_size - 1) / block_size;
  auto run_one = [&](std::uint64_t b) {
    const std::uint64_t first = b * block_size;
    const std::uint64_t count = std::min(block_size, trials - first);
    RngStream rng = base.substream(b);
    fn(b, first, count, rng);
  };
  if (workers <= 1 || blocks == 1) {
    for (std::uint64_t b = 0; b < blocks; ++b) run_one(b);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  const unsigned nthreads = unsigned(std::min<std::uint64_t>(workers, blocks));
  std::vector<std::exception_ptr> errors(nthreads);
  for (unsigned t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t] {
      for (;;) {
        const std::uint64_t b = next.fetch_add(1);
        if (b >= blocks || failed.load(std::memory_order_relaxed)) return;
        try {
          run_one(b);
        } catch (...) {
          errors[t] = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Default Monte Carlo block size; small enough to balance load, large enough
// to amortize per-block setup.
inline constexpr std::uint64_t kMcBlock = 8192;

}  // namespace ridkit
