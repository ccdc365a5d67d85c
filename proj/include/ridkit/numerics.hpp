#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace ridkit {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLog2E = 1.4426950408889634074;   // log2(e)
inline constexpr double kLn2 = 0.69314718055994530942;    // ln(2)

inline double nats_to_bits(double x) { return x * kLog2E; }
inline double bits_to_nats(double x) { return x * kLn2; }

// Upper tail of the standard normal, Q(x) = P[Z > x].  Relative error
// ~1e-15 near the center, a few 1e-14 deep in the tail; underflows
// monotonically to 0 for large x instead of failing.  Throws
// std::domain_error on non-finite input.
double q_function(double x);

// Standard normal CDF, = 1 - Q(x).
double normal_cdf(double x);

// Standard normal density.
double normal_pdf(double x);

// Inverse of q_function on (0,1): q_function(q_inverse(p)) == p to ~1e-12.
// Throws std::domain_error unless 0 < p < 1.
double q_inverse(double p);

// ln I_nu(s) for the modified Bessel function of the first kind, nu >= 0,
// s >= 0, evaluated in the log domain so large arguments do not overflow.
// Relative accuracy ~1e-10 or better across regimes (series for moderate
// arguments, large-argument asymptotic, uniform large-order asymptotic).
double bessel_i_log(double nu, double s);

// ln( I_nu(s) * (s/2)^(-nu) ), finite and smooth down to s == 0 where it
// equals -lgamma(nu+1).  This is the combination that appears in densities
// on spheres, where the raw (s/2)^nu factor would underflow.
double bessel_i_log_normalized(double nu, double s);

// Base-2 log-sum-exp: given v_i = log2(x_i), returns log2(sum_i x_i) without
// leaving the log domain.  Empty input and non-finite entries other than
// -infinity throw std::domain_error.
double log_sum_exp(std::span<const double> log2_values);

// Streaming form of log_sum_exp for one pass over large sample sets.
class Log2SumAccumulator {
 public:
  void add(double log2_value);
  // log2 of the running sum; -infinity if nothing was added.
  double result() const;
  std::uint64_t count() const { return count_; }

 private:
  double max_ = -1e308;
  double sum_ = 0.0;  // sum of 2^(v - max_)
  std::uint64_t count_ = 0;
};

// Which representation a LogLayered value currently uses.
enum class Layer { linear, log, loglog };

// A positive quantity stored at one of three scales: the value itself
// (linear), its base-2 log (log), or the base-2 log of that (loglog).
// Used for code sizes that can be singly or doubly exponential in the
// blocklength.  Promotion is always allowed when the stored quantity is in
// range; demotion throws std::domain_error instead of overflowing.
class LogLayered {
 public:
  static LogLayered from_linear(double x);
  static LogLayered from_log2(double v);      // quantity = 2^v
  static LogLayered from_log2log2(double v);  // quantity = 2^(2^v)

  Layer layer() const { return layer_; }
  double value() const { return value_; }

  // One step toward deeper log scale: linear->log (needs quantity > 0),
  // log->loglog (needs quantity > 1).
  LogLayered promoted() const;
  // One step toward linear; throws std::domain_error if the result would
  // overflow a double (message names the failing layer step).
  LogLayered demoted() const;
  bool demotable() const;

  // Views of the quantity at a fixed scale, demoting/promoting as needed.
  // Throw std::domain_error when the requested scale is unreachable.
  double as_linear() const;
  double log2_value() const;
  double log2log2_value() const;

 private:
  LogLayered(Layer layer, double value) : layer_(layer), value_(value) {}
  Layer layer_;
  double value_;
};

const char* layer_name(Layer layer);

}  // namespace ridkit
