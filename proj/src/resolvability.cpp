#include "ridkit/resolvability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ridkit/numerics.hpp"
#include "ridkit/parallel.hpp"
#include "ridkit/shell_quant.hpp"

namespace ridkit {

namespace {

constexpr double kLn2Pi = 1.8378770664093454836;  // ln(2*pi)

}  // namespace

std::span<const double> ResolvabilityCodebook::codeword(int i) const {
  if (i < 0 || i >= size)
    throw std::domain_error("ResolvabilityCodebook: codeword index out of range");
  return {codewords.data() + std::size_t(i) * spec.n, std::size_t(spec.n)};
}

ResolvabilityCodebook ResolvabilityCodebook::sample(const ChannelSpec& spec,
                                                    int size, RngStream& rng) {
  if (size < 1)
    throw std::domain_error("ResolvabilityCodebook: requires size >= 1");
  ResolvabilityCodebook book;
  book.spec = spec;
  book.size = size;
  book.codewords.reserve(std::size_t(size) * spec.n);
  for (int i = 0; i < size; ++i) {
    const std::vector<double> c = sample_shell(spec, rng);
    book.codewords.insert(book.codewords.end(), c.begin(), c.end());
  }
  return book;
}

double induced_output_log_density(const ResolvabilityCodebook& book,
                                  std::span<const double> y) {
  if (int(y.size()) != book.spec.n)
    throw std::domain_error(
        "induced_output_log_density: y length must equal n");
  Log2SumAccumulator acc;
  for (int i = 0; i < book.size; ++i)
    acc.add(channel_log_density(book.spec, book.codeword(i), y));
  return acc.result() - std::log2(double(book.size));
}

double shell_output_log_density(const ChannelSpec& spec,
                                std::span<const double> y) {
  if (int(y.size()) != spec.n)
    throw std::domain_error("shell_output_log_density: y length must equal n");
  const double l = spec.shell_radius();
  if (spec.n == 1) {
    // Uniform on the 0-sphere: two atoms at +-sqrt(P).
    Log2SumAccumulator acc;
    const double d1 = y[0] - l, d2 = y[0] + l;
    acc.add(-1.0 - 0.5 * (kLn2Pi + d1 * d1) * kLog2E);
    acc.add(-1.0 - 0.5 * (kLn2Pi + d2 * d2) * kLog2E);
    return acc.result();
  }
  double r2 = 0.0;
  for (double v : y) r2 += v * v;
  const double r = std::sqrt(r2);
  const double nu = 0.5 * spec.n - 1.0;
  // ln p(y) = -(n/2) ln 2pi - (r^2 + l^2)/2 + ln Gamma(n/2)
  //           + ln[ I_nu(r l) / (r l / 2)^nu ]
  const double ln_p = -0.5 * spec.n * kLn2Pi - 0.5 * (r2 + l * l) +
                      std::lgamma(0.5 * spec.n) +
                      bessel_i_log_normalized(nu, r * l);
  return ln_p * kLog2E;
}

TvEstimate tv_estimate(const LogDensityFn& log2_p, const LogDensityFn& log2_q,
                       const SamplerFn& sample_p, int dim,
                       std::uint64_t trials, const RngStream& rng,
                       unsigned workers) {
  if (dim < 1) throw std::domain_error("tv_estimate: requires dim >= 1");
  if (trials < 100) throw std::domain_error("tv_estimate: requires trials >= 100");
  std::vector<double> vals(trials);
  run_blocks(trials, kMcBlock, workers, rng,
             [&](std::uint64_t, std::uint64_t first, std::uint64_t count,
                 RngStream& r) {
               std::vector<double> y(dim);
               for (std::uint64_t t = 0; t < count; ++t) {
                 sample_p(r, y);
                 double lp, lq;
                 try {
                   lp = log2_p(y);
                   lq = log2_q(y);
                 } catch (const std::exception& e) {
                   throw std::runtime_error(
                       "tv_estimate: density evaluator failed at trial " +
                       std::to_string(first + t) + ": " + e.what());
                 }
                 // 2*(1 - q/p)^+ under p integrates to the L1 distance
                 // (d = 2 * integral of (p-q)^+), stays in [0,2] per sample,
                 // and saturates correctly when the supports separate.
                 vals[first + t] =
                     2.0 * std::max(0.0, 1.0 - std::exp2(lq - lp));
               }
             });
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= double(trials);
  double var = 0.0;
  for (double v : vals) {
    const double d = v - mean;
    var += d * d;
  }
  var /= double(trials - 1);
  const double se = std::sqrt(var / double(trials));
  TvEstimate tv;
  tv.value = mean;
  tv.ci_low = std::max(0.0, mean - 1.959963984540054 * se);
  tv.ci_high = std::min(2.0, mean + 1.959963984540054 * se);
  tv.trials = trials;
  return tv;
}

bool mtype_check(std::span<const double> masses, std::uint64_t denominator,
                 double tol) {
  if (denominator < 1)
    throw std::domain_error("mtype_check: requires denominator >= 1");
  double total = 0.0;
  for (double m : masses) total += m;
  if (std::fabs(total - 1.0) > tol)
    throw std::domain_error("mtype_check: masses must sum to 1 within tolerance");
  for (double m : masses) {
    if (m < -tol) return false;
    const double scaled = m * double(denominator);
    if (std::fabs(scaled - std::round(scaled)) > tol * double(denominator))
      return false;
  }
  return true;
}

FreyBound frey_bound(const FreyParams& fp) {
  if (fp.n < 1) throw std::domain_error("frey_bound: requires n >= 1");
  if (!(fp.central_second > 0.0) || !std::isfinite(fp.central_second))
    throw std::domain_error("frey_bound: requires central second moment > 0");
  if (!(fp.third_abs >= 0.0) || !std::isfinite(fp.third_abs))
    throw std::domain_error("frey_bound: requires third absolute moment >= 0");
  if (!std::isfinite(fp.mutual_info))
    throw std::domain_error("frey_bound: requires finite mutual information");
  if (!(fp.xi > 0.0) || !(fp.xi < 1.0))
    throw std::domain_error("frey_bound: requires 0 < xi < 1");
  if (!(fp.c > 1.0)) throw std::domain_error("frey_bound: requires c > 1");
  if (!(fp.d > 0.0) || !(fp.d < fp.c - 1.0))
    throw std::domain_error("frey_bound: requires 0 < d < c - 1");
  const double n = double(fp.n);
  if (std::pow(n, 0.5 * (fp.c - fp.d)) < 6.0)
    throw std::domain_error("frey_bound: requires n^((c-d)/2) >= 6");

  FreyBound out;
  const double qi = q_inverse(fp.xi);
  const double log2n = std::log2(n);
  out.rate_bits =
      fp.mutual_info + std::sqrt(fp.central_second / n) * qi + fp.c * log2n / n;
  out.mu = q_function(qi + fp.d * log2n / std::sqrt(n * fp.central_second)) +
           fp.third_abs / (std::pow(fp.central_second, 1.5) * std::sqrt(n));

  // First summand exp(-(1/3) n mu 2^{nR}); the inner exponential routinely
  // overflows, in which case the term is an exact 0 in double precision
  // (mu > 0 always, since Q(.) > 0 and the moment term is nonnegative).
  const double log2_codebook = n * out.rate_bits;
  if (log2_codebook > 1020.0) {
    out.log2_term1 = -std::numeric_limits<double>::infinity();
  } else {
    out.log2_term1 =
        -(n * out.mu / 3.0) * std::exp2(log2_codebook) * kLog2E;
  }
  const double term1 = std::exp2(out.log2_term1);
  out.term2 = (7.0 / 6.0 + std::sqrt(1.5 * kPi) * std::exp(0.75)) *
              std::exp(-std::pow(n, 0.5 * (fp.c - fp.d - 1.0)));
  out.bound = term1 + out.term2;
  return out;
}

std::vector<ResolvabilityPoint> resolvability_experiment(
    const ChannelSpec& spec, std::span<const double> rates,
    std::uint64_t trials, const RngStream& rng, unsigned workers,
    ResolvabilityTarget target) {
  if (spec.n > 12)
    throw std::runtime_error(
        "resolvability_experiment: desk-scale guard requires n <= 12");
  if (rates.empty())
    throw std::domain_error("resolvability_experiment: requires rates");
  std::vector<ResolvabilityPoint> curve;
  curve.reserve(rates.size());
  for (std::size_t k = 0; k < rates.size(); ++k) {
    const double e = std::ceil(spec.n * rates[k]);
    if (e > 16.0)
      throw std::runtime_error(
          "resolvability_experiment: desk-scale guard requires M = "
          "2^ceil(n*R) <= 2^16; rate " +
          std::to_string(rates[k]) + " needs 2^" +
          std::to_string(std::int64_t(e)));
    const std::uint64_t m = e <= 0.0 ? 1 : (std::uint64_t(1) << unsigned(e));

    RngStream book_rng = rng.substream(2 * k);
    const ResolvabilityCodebook book =
        ResolvabilityCodebook::sample(spec, int(m), book_rng);

    LogDensityFn log_p;
    SamplerFn sample_p;
    if (target == ResolvabilityTarget::shell) {
      log_p = [&](std::span<const double> y) {
        return shell_output_log_density(spec, y);
      };
      sample_p = [&](RngStream& r, std::span<double> y) {
        const std::vector<double> x = sample_shell(spec, r);
        for (std::size_t i = 0; i < y.size(); ++i)
          y[i] = x[i] + r.next_normal();
      };
    } else {
      const double sd = std::sqrt(1.0 + spec.power);
      log_p = [&](std::span<const double> y) {
        return cao_log_density(spec, y);
      };
      sample_p = [sd](RngStream& r, std::span<double> y) {
        for (double& v : y) v = sd * r.next_normal();
      };
    }
    LogDensityFn log_q = [&](std::span<const double> y) {
      return induced_output_log_density(book, y);
    };
    ResolvabilityPoint pt;
    pt.rate_bits = rates[k];
    pt.codebook_size = m;
    pt.tv = tv_estimate(log_p, log_q, sample_p, spec.n, trials,
                        rng.substream(2 * k + 1), workers);
    curve.push_back(pt);
  }
  return curve;
}

}  // namespace ridkit
