#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ridkit/channel.hpp"
#include "ridkit/rng.hpp"

namespace ridkit {

struct TvEstimate {
  double value = 0.0;    // estimated variational (L1) distance, in [0,2]
  double ci_low = 0.0;   // normal-approximation 95% CI for the estimate
  double ci_high = 0.0;
  std::uint64_t trials = 0;
};

// A codebook whose induced output law (1/M) sum_i W^n(.|c_i) is meant to
// approximate the shell output law.  Codewords live on the power shell.
struct ResolvabilityCodebook {
  ChannelSpec spec;
  int size = 0;                  // M
  std::vector<double> codewords; // M x n, row-major

  std::span<const double> codeword(int i) const;
  // M codewords drawn independently, uniform on the shell.
  static ResolvabilityCodebook sample(const ChannelSpec& spec, int size,
                                      RngStream& rng);
};

// log2 of the codebook's induced output density at y.
double induced_output_log_density(const ResolvabilityCodebook& book,
                                  std::span<const double> y);

// log2 of the exact output density when the input is uniform on the shell:
// an isotropic law with a Bessel radial profile (two-atom mixture at n = 1).
double shell_output_log_density(const ChannelSpec& spec,
                                std::span<const double> y);

using LogDensityFn = std::function<double(std::span<const double>)>;
using SamplerFn = std::function<void(RngStream&, std::span<double>)>;

// Monte Carlo estimate of the variational (L1) distance between P and Q via
// d(P,Q) = 2 E_P max(0, 1 - Q(Y)/P(Y)), sampling Y ~ P and evaluating the
// ratio in the log domain.  Each sample lies in [0,2], so the estimator is
// bounded and saturates correctly when the supports separate.  Deterministic
// in (seed, trials); independent of worker count.
TvEstimate tv_estimate(const LogDensityFn& log2_p, const LogDensityFn& log2_q,
                       const SamplerFn& sample_p, int dim,
                       std::uint64_t trials, const RngStream& rng,
                       unsigned workers = 1);

// Checks that `masses` is an M-type: every mass a nonnegative multiple of
// 1/M (within tol) and the total is 1 (within tol).
bool mtype_check(std::span<const double> masses, std::uint64_t denominator,
                 double tol = 1e-12);

// Inputs to the soft-covering tail bound: per-use mutual information (bits),
// its central second and absolute third moments, target tail point xi, and
// the two rate-margin knobs c > 1 and 0 < d < c - 1.
struct FreyParams {
  int n = 0;
  double mutual_info = 0.0;    // I, bits per use
  double central_second = 0.0; // V, bits^2 per use
  double third_abs = 0.0;      // rho, bits^3 per use
  double xi = 0.0;
  double c = 0.0;
  double d = 0.0;
};

struct FreyBound {
  double rate_bits = 0.0;  // R = I + sqrt(V/n) Qinv(xi) + c log2(n)/n
  double mu = 0.0;
  double bound = 0.0;      // on the variational distance
  double log2_term1 = 0.0; // log2 of the soft-covering term (may be -inf)
  double term2 = 0.0;
};

// Evaluates the soft-covering failure bound at rate R(xi, c, d): the chance
// that a random rate-R codebook misses the target output statistics decays
// as exp(-n mu e^{nR}/3) plus a subgaussian remainder exp(-n^{(c-d-1)/2}).
// Requires c > 1, 0 < d < c - 1, and n^{(c-d)/2} >= 6.
FreyBound frey_bound(const FreyParams& params);

struct ResolvabilityPoint {
  double rate_bits = 0.0;
  std::uint64_t codebook_size = 0;  // M = ceil(2^{n R})
  TvEstimate tv;
};

// Which output law the induced mixture is compared against: the exact
// uniform-on-shell output (the default) or the capacity-achieving Gaussian.
enum class ResolvabilityTarget { shell, cao };

// Samples one random codebook per rate and estimates the variational
// distance between its induced output law and the target output law.
std::vector<ResolvabilityPoint> resolvability_experiment(
    const ChannelSpec& spec, std::span<const double> rates,
    std::uint64_t trials, const RngStream& rng, unsigned workers = 1,
    ResolvabilityTarget target = ResolvabilityTarget::shell);

}  // namespace ridkit
