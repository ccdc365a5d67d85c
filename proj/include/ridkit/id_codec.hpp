#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ridkit/channel.hpp"
#include "ridkit/rng.hpp"

namespace ridkit {

// How the per-message codeword supports are built: either every message gets
// its own independently drawn pool, or all messages share one pool and each
// message owns a random (distinct) subset of it.
enum class IdConstruction { independent_pools, shared_pool_subsets };

const char* construction_name(IdConstruction c);
IdConstruction construction_from_name(const std::string& name);

// A randomized identification code: message i encodes by picking one of its
// support codewords uniformly; receiver i accepts y when any codeword of its
// support clears the information-density threshold.
struct IdCode {
  ChannelSpec spec;
  int messages = 0;
  IdConstruction construction = IdConstruction::independent_pools;
  double log2_threshold = 0.0;  // may be +-infinity (degenerate decoders)
  int per_message = 0;          // support size of every message

  // independent_pools: messages * per_message rows of length n.
  std::vector<double> codebooks;
  // shared_pool_subsets: pool_size rows of length n, plus per-message sorted
  // index subsets (all of size per_message, pairwise distinct).
  int pool_size = 0;
  std::vector<double> pool;
  std::vector<std::vector<std::int32_t>> subsets;

  // Provenance of the construction randomness.
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  std::span<const double> codeword(int message, int k) const;
};

struct IdCodeParams {
  int messages = 0;
  IdConstruction construction = IdConstruction::independent_pools;
  int per_message = 1;  // codewords per message (independent_pools) / subset size
  int pool_size = 0;    // shared_pool_subsets only
  double log2_threshold = 0.0;
};

// Draws the codebooks.  independent_pools: messages*per_message i.i.d.
// uniform-on-shell codewords.  shared_pool_subsets: pool_size shell
// codewords plus `messages` distinct uniformly random size-per_message
// subsets (rejection sampling).  Throws when messages exceeds the number of
// distinct subsets.
IdCode build_id_code(const ChannelSpec& spec, const IdCodeParams& params,
                     RngStream& rng);

// Receiver `message`'s decision on output y.
bool identify(const IdCode& code, int message, std::span<const double> y);

struct ErrorEstimate {
  double value = 0.0;
  double ci_low = 0.0;   // 95% Clopper-Pearson
  double ci_high = 0.0;
  std::uint64_t trials = 0;
};

// Monte Carlo missed-detection rate of message i: y drawn through the
// channel from i's own encoder, counted when receiver i rejects.
// Degenerate thresholds (+-inf) short-circuit to exact 0/1 with a zero-width
// interval.  Deterministic in (seed, trials); independent of workers.
ErrorEstimate estimate_type1(const IdCode& code, int message,
                             std::uint64_t trials, const RngStream& rng,
                             unsigned workers = 1);

// Monte Carlo false-activation rate: y drawn from sender `sent`'s encoder,
// counted when receiver `tested` (!= sent) accepts.
ErrorEstimate estimate_type2(const IdCode& code, int sent, int tested,
                             std::uint64_t trials, const RngStream& rng,
                             unsigned workers = 1);

struct PairError {
  int sent = 0;
  int tested = 0;
  ErrorEstimate estimate;
};

struct ErrorProfile {
  ErrorEstimate max_type1;
  int argmax_type1 = 0;
  ErrorEstimate max_type2;
  int argmax_type2_sent = 0;
  int argmax_type2_tested = 0;
  std::vector<ErrorEstimate> type1;  // per message
  std::vector<PairError> type2;      // every ordered pair (sent, tested)

  // Whether the measured profile certifies the (eps, delta) pair at the
  // interval confidence: every upper CI end within the targets.
  bool certifies(double eps, double delta) const;
};

// Exhaustive max over messages and ordered pairs.  Refuses (with the
// required budget in the message) when messages*(messages-1)*trials_per_pair
// exceeds `budget`.
ErrorProfile code_error_profile(const IdCode& code,
                                std::uint64_t trials_per_pair,
                                const RngStream& rng,
                                std::uint64_t budget = 100'000'000,
                                unsigned workers = 1);

// Self-describing text round-trip at 17 significant digits; the reloaded
// code reproduces identify() decisions bit-exactly.
void save_id_code(const IdCode& code, std::ostream& out);
IdCode load_id_code(std::istream& in);

// 95% Clopper-Pearson interval for `successes` out of `trials` (exposed for
// reuse in tests; exact binomial, valid at the 0/1 boundaries).
std::pair<double, double> clopper_pearson(std::uint64_t successes,
                                          std::uint64_t trials);

}  // namespace ridkit
