#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ridkit/rng.hpp"

namespace ridkit {

// A memoryless real AWGN channel used n times: y = x + z, z ~ N(0, I_n),
// with inputs confined to the power shell ||x||^2 = n * power.
struct ChannelSpec {
  int n = 1;
  double power = 1.0;
  double noise_var = 1.0;  // fixed at 1; kept explicit for clarity

  static ChannelSpec make(int n, double power);
  double shell_radius() const;  // sqrt(n * power)
};

// Capacity-achieving output law: y ~ N(0, (1+power) I_n).

// log2 of the n-use channel transition density W^n(y|x).
double channel_log_density(const ChannelSpec& spec, std::span<const double> x,
                           std::span<const double> y);

// log2 of the capacity-achieving output density at y.
double cao_log_density(const ChannelSpec& spec, std::span<const double> y);

// Information density i(x; y) = log2 W^n(y|x) - log2 Q*(y), in bits.
double info_density(const ChannelSpec& spec, std::span<const double> x,
                    std::span<const double> y);

// Draw y ~ W^n(.|x) into `y` (length n).
void draw_output(const ChannelSpec& spec, std::span<const double> x,
                 std::span<double> y, RngStream& rng);

struct MomentEstimate {
  double mean = 0.0;        // of (1/n) i(x;Y), bits per use
  double variance = 0.0;    // of (1/n) i(x;Y)
  double third_abs = 0.0;   // E|((1/n) i) - mean|^3
  double std_error_mean = 0.0;
  std::uint64_t trials = 0;
};

// Monte Carlo moments of the per-use information density at input x.
// Deterministic in (seed, trials); independent of `workers`.
MomentEstimate estimate_moments(const ChannelSpec& spec,
                                std::span<const double> x,
                                std::uint64_t trials, const RngStream& rng,
                                unsigned workers = 1);

struct SampleSummary {
  std::uint64_t trials = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct CltDiagnostic {
  // Kolmogorov-Smirnov distance between the empirical law of the normalized
  // statistic (i(x;Y) - n*C) / sqrt(n*V) and the standard normal CDF.
  double ks_distance = 0.0;
  // Empirical stand-in for the Berry-Esseen constant: ks_distance * sqrt(n).
  // A report, not ground truth.
  double berry_stand_in = 0.0;
  SampleSummary summary;  // of the raw (unnormalized) statistic
};

// How close i(x;Y) is to its Gaussian limit at blocklength n.  Requires x on
// the power shell (the normalization constants assume it).
CltDiagnostic clt_diagnostic(const ChannelSpec& spec, std::span<const double> x,
                             std::uint64_t trials, const RngStream& rng,
                             unsigned workers = 1);

// Any input with ||x||^2 == n * power; used as the default probe point.
std::vector<double> shell_probe_input(const ChannelSpec& spec);

// One-sample KS distance of `sorted_samples` (ascending) against a CDF given
// as a callable; shared by the diagnostics above and the tests.
double ks_distance_sorted(std::span<const double> sorted_samples,
                          double (*cdf)(double));

}  // namespace ridkit
