#include "ridkit/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ridkit/numerics.hpp"
#include "ridkit/parallel.hpp"

namespace ridkit {

namespace {

constexpr double kLog2TwoPi = 2.6514961294723187980;  // log2(2*pi)

void check_dim(const ChannelSpec& spec, std::span<const double> v,
               const char* name) {
  if (int(v.size()) != spec.n)
    throw std::domain_error(std::string(name) +
                            ": vector length must equal the blocklength n");
}

double sq_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

void check_on_shell(const ChannelSpec& spec, std::span<const double> x,
                    const char* who) {
  check_dim(spec, x, who);
  const double target = spec.n * spec.power;
  if (std::fabs(sq_norm(x) - target) > 1e-9 * std::max(1.0, target))
    throw std::domain_error(
        std::string(who) +
        ": requires x on the power shell (||x||^2 = n * power within 1e-9)");
}

}  // namespace

ChannelSpec ChannelSpec::make(int n, double power) {
  if (n < 1) throw std::domain_error("ChannelSpec: requires n >= 1");
  if (!(power > 0.0) || !std::isfinite(power))
    throw std::domain_error("ChannelSpec: requires finite power > 0");
  return ChannelSpec{n, power, 1.0};
}

double ChannelSpec::shell_radius() const { return std::sqrt(n * power); }

double channel_log_density(const ChannelSpec& spec, std::span<const double> x,
                           std::span<const double> y) {
  check_dim(spec, x, "channel_log_density");
  check_dim(spec, y, "channel_log_density");
  double d2 = 0.0;
  for (int i = 0; i < spec.n; ++i) {
    const double d = y[i] - x[i];
    d2 += d * d;
  }
  return -0.5 * spec.n * kLog2TwoPi - 0.5 * d2 * kLog2E;
}

double cao_log_density(const ChannelSpec& spec, std::span<const double> y) {
  check_dim(spec, y, "cao_log_density");
  const double var = 1.0 + spec.power;
  return -0.5 * spec.n * (kLog2TwoPi + std::log2(var)) -
         0.5 * (sq_norm(y) / var) * kLog2E;
}

double info_density(const ChannelSpec& spec, std::span<const double> x,
                    std::span<const double> y) {
  check_dim(spec, x, "info_density");
  check_dim(spec, y, "info_density");
  // Expanded difference of the two log densities; the n*log2(2pi) parts
  // cancel exactly, leaving the numerically friendly form.
  const double var = 1.0 + spec.power;
  double d2 = 0.0;
  for (int i = 0; i < spec.n; ++i) {
    const double d = y[i] - x[i];
    d2 += d * d;
  }
  return 0.5 * spec.n * std::log2(var) +
         0.5 * (sq_norm(y) / var - d2) * kLog2E;
}

void draw_output(const ChannelSpec& spec, std::span<const double> x,
                 std::span<double> y, RngStream& rng) {
  check_dim(spec, x, "draw_output");
  if (y.size() != x.size())
    throw std::domain_error("draw_output: output length must equal n");
  for (int i = 0; i < spec.n; ++i) y[i] = x[i] + rng.next_normal();
}

std::vector<double> shell_probe_input(const ChannelSpec& spec) {
  // Constant vector (sqrt(P), ..., sqrt(P)); the statistics of i(x;Y) are
  // the same for every point of the shell by rotational symmetry.
  return std::vector<double>(spec.n, std::sqrt(spec.power));
}

namespace {

// One pass that fills per-trial info densities, block-deterministically.
std::vector<double> sample_info_density(const ChannelSpec& spec,
                                        std::span<const double> x,
                                        std::uint64_t trials,
                                        const RngStream& rng,
                                        unsigned workers) {
  std::vector<double> out(trials);
  run_blocks(trials, kMcBlock, workers, rng,
             [&](std::uint64_t, std::uint64_t first, std::uint64_t count,
                 RngStream& r) {
               std::vector<double> y(spec.n);
               for (std::uint64_t t = 0; t < count; ++t) {
                 draw_output(spec, x, y, r);
                 out[first + t] = info_density(spec, x, y);
               }
             });
  return out;
}

}  // namespace

MomentEstimate estimate_moments(const ChannelSpec& spec,
                                std::span<const double> x,
                                std::uint64_t trials, const RngStream& rng,
                                unsigned workers) {
  check_on_shell(spec, x, "estimate_moments");
  if (trials < 100)
    throw std::domain_error("estimate_moments: requires trials >= 100");
  std::vector<double> s = sample_info_density(spec, x, trials, rng, workers);
  const double inv_n = 1.0 / spec.n;
  double mean = 0.0;
  for (double v : s) mean += v * inv_n;
  mean /= double(trials);
  double var = 0.0, third = 0.0;
  for (double v : s) {
    const double d = v * inv_n - mean;
    var += d * d;
    third += std::fabs(d) * d * d;
  }
  var /= double(trials - 1);
  third /= double(trials);
  MomentEstimate m;
  m.mean = mean;
  m.variance = var;
  m.third_abs = third;
  m.trials = trials;
  m.std_error_mean = std::sqrt(m.variance / double(m.trials));
  return m;
}

double ks_distance_sorted(std::span<const double> sorted_samples,
                          double (*cdf)(double)) {
  const std::size_t m = sorted_samples.size();
  if (m == 0) throw std::domain_error("ks_distance_sorted: empty sample");
  double ks = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double f = cdf(sorted_samples[i]);
    ks = std::max(ks, (double(i) + 1.0) / double(m) - f);
    ks = std::max(ks, f - double(i) / double(m));
  }
  return ks;
}

CltDiagnostic clt_diagnostic(const ChannelSpec& spec, std::span<const double> x,
                             std::uint64_t trials, const RngStream& rng,
                             unsigned workers) {
  check_on_shell(spec, x, "clt_diagnostic");
  if (trials < 1)
    throw std::domain_error("clt_diagnostic: requires trials >= 1");
  std::vector<double> s = sample_info_density(spec, x, trials, rng, workers);

  SampleSummary sum;
  sum.trials = trials;
  sum.min = s[0];
  sum.max = s[0];
  double mean = 0.0;
  for (double v : s) {
    mean += v;
    sum.min = std::min(sum.min, v);
    sum.max = std::max(sum.max, v);
  }
  mean /= double(trials);
  double var = 0.0;
  for (double v : s) {
    const double d = v - mean;
    var += d * d;
  }
  sum.mean = mean;
  sum.stddev = trials > 1 ? std::sqrt(var / double(trials - 1)) : 0.0;

  // Normalize by the exact limit parameters (mean n*C, variance n*V), the
  // same centering the Gaussian limit is stated for, then compare to N(0,1).
  const double p1 = 1.0 + spec.power;
  const double cap = 0.5 * std::log2(p1);
  const double disp =
      kLog2E * kLog2E * spec.power * (spec.power + 2.0) / (2.0 * p1 * p1);
  const double center = spec.n * cap;
  const double scale = std::sqrt(spec.n * disp);
  std::vector<double> z(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) z[i] = (s[i] - center) / scale;
  std::sort(z.begin(), z.end());

  CltDiagnostic d;
  d.summary = sum;
  d.ks_distance = ks_distance_sorted(z, [](double t) { return normal_cdf(t); });
  d.berry_stand_in = d.ks_distance * std::sqrt(double(spec.n));
  return d;
}

}  // namespace ridkit
