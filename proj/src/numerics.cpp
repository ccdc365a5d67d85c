#include "ridkit/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ridkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Rational-approximation erfc after W. J. Cody's CALERF, ~1e-16 relative
// accuracy in the central ranges.  Three ranges: |x| <= 0.46875, <= 4, > 4.
double erfc_cody(double x) {
  static const double a[5] = {3.16112374387056560e00, 1.13864154151050156e02,
                              3.77485237685302021e02, 3.20937758913846947e03,
                              1.85777706184603153e-1};
  static const double b[4] = {2.36012909523441209e01, 2.44024637934444173e02,
                              1.28261652607737228e03, 2.84423683343917062e03};
  static const double c[9] = {5.64188496988670089e-1, 8.88314979438837594e00,
                              6.61191906371416295e01, 2.98635138197400131e02,
                              8.81952221241769090e02, 1.71204761263407058e03,
                              2.05107837782607147e03, 1.23033935479799725e03,
                              2.15311535474403846e-8};
  static const double d[8] = {1.57449261107098347e01, 1.17693950891312499e02,
                              5.37181101862009858e02, 1.62138957456669019e03,
                              3.29079923573345963e03, 4.36261909014324716e03,
                              3.43936767414372164e03, 1.23033935480374942e03};
  static const double p[6] = {3.05326634961232344e-1, 3.60344899949804439e-1,
                              1.25781726111229246e-1, 1.60837851487422766e-2,
                              6.58749161529837803e-4, 1.63153871373020978e-2};
  static const double q[5] = {2.56852019228982242e00, 1.87295284992346047e00,
                              5.27905102951428412e-1, 6.05183413124413191e-2,
                              2.33520497626869185e-3};
  const double y = std::fabs(x);
  double result;
  if (y <= 0.46875) {
    const double z = y > 1.11e-16 ? y * y : 0.0;
    double xnum = a[4] * z;
    double xden = z;
    for (int i = 0; i < 3; ++i) {
      xnum = (xnum + a[i]) * z;
      xden = (xden + b[i]) * z;
    }
    return 1.0 - x * (xnum + a[3]) / (xden + b[3]);
  } else if (y <= 4.0) {
    double xnum = c[8] * y;
    double xden = y;
    for (int i = 0; i < 7; ++i) {
      xnum = (xnum + c[i]) * y;
      xden = (xden + d[i]) * y;
    }
    result = (xnum + c[7]) / (xden + d[7]);
  } else {
    const double z = 1.0 / (y * y);
    double xnum = p[5] * z;
    double xden = z;
    for (int i = 0; i < 4; ++i) {
      xnum = (xnum + p[i]) * z;
      xden = (xden + q[i]) * z;
    }
    result = z * (xnum + p[4]) / (xden + q[4]);
    result = (5.6418958354775628695e-1 - result) / y;
  }
  // exp(-y^2) split to keep the argument of each exp small and exact-ish.
  const double ysq = std::trunc(y * 16.0) / 16.0;
  const double del = (y - ysq) * (y + ysq);
  result = std::exp(-ysq * ysq) * std::exp(-del) * result;
  return x < 0.0 ? 2.0 - result : result;
}

// Acklam's rational approximation to the inverse normal CDF (~1.15e-9
// relative); refined below with one Newton step off q_function.
double inverse_normal_cdf_seed(double pr) {
  static const double a1 = -3.969683028665376e+01, a2 = 2.209460984245205e+02,
                      a3 = -2.759285104469687e+02, a4 = 1.383577518672690e+02,
                      a5 = -3.066479806614716e+01, a6 = 2.506628277459239e+00;
  static const double b1 = -5.447609879822406e+01, b2 = 1.615858368580409e+02,
                      b3 = -1.556989798598866e+02, b4 = 6.680131188771972e+01,
                      b5 = -1.328068155288572e+01;
  static const double c1 = -7.784894002430293e-03, c2 = -3.223964580411365e-01,
                      c3 = -2.400758277161838e+00, c4 = -2.549732539343734e+00,
                      c5 = 4.374664141464968e+00, c6 = 2.938163982698783e+00;
  static const double d1 = 7.784695709041462e-03, d2 = 3.224671290700398e-01,
                      d3 = 2.445134137142996e+00, d4 = 3.754408661907416e+00;
  static const double p_low = 0.02425;
  if (pr < p_low) {
    const double qv = std::sqrt(-2.0 * std::log(pr));
    return (((((c1 * qv + c2) * qv + c3) * qv + c4) * qv + c5) * qv + c6) /
           ((((d1 * qv + d2) * qv + d3) * qv + d4) * qv + 1.0);
  }
  if (pr <= 1.0 - p_low) {
    const double qv = pr - 0.5;
    const double r = qv * qv;
    return (((((a1 * r + a2) * r + a3) * r + a4) * r + a5) * r + a6) * qv /
           (((((b1 * r + b2) * r + b3) * r + b4) * r + b5) * r + 1.0);
  }
  const double qv = std::sqrt(-2.0 * std::log(1.0 - pr));
  return -(((((c1 * qv + c2) * qv + c3) * qv + c4) * qv + c5) * qv + c6) /
         ((((d1 * qv + d2) * qv + d3) * qv + d4) * qv + 1.0);
}

// Natural-log log-sum-exp over a short term list (internal helper for the
// Bessel series).
double lse_nat(const std::vector<double>& t) {
  double m = -kInf;
  for (double v : t) m = std::max(m, v);
  if (m == -kInf) return -kInf;
  double s = 0.0;
  for (double v : t) s += std::exp(v - m);
  return m + std::log(s);
}

// Ascending series for ln I_nu(s) with every term kept in the log domain:
// term_k = (nu + 2k) ln(s/2) - lgamma(k+1) - lgamma(nu+k+1).
// When normalized, the nu*ln(s/2) factor is dropped (ratio to (s/2)^nu).
double bessel_series_log(double nu, double s, bool normalized) {
  const double l = std::log(0.5 * s);
  std::vector<double> terms;
  terms.reserve(64);
  double t = (normalized ? 0.0 : nu * l) - std::lgamma(nu + 1.0);
  double peak = t;
  for (int k = 0;; ++k) {
    terms.push_back(t);
    peak = std::max(peak, t);
    const double next =
        t + 2.0 * l - std::log((k + 1.0) * (nu + k + 1.0));
    // Terms rise to a single peak then fall; stop well past the peak.
    if (next < t && next < peak - 46.0) break;
    if (k > 20000)
      throw std::domain_error("bessel_i_log: series failed to converge");
    t = next;
  }
  return lse_nat(terms);
}

// Large-argument asymptotic: I_nu(s) ~ e^s / sqrt(2 pi s) * sum_k t_k with
// t_0 = 1, t_{k+1} = -t_k (4nu^2 - (2k+1)^2) / (8 s (k+1)).  Valid here only
// when the series is sharply decreasing from the start (guarded by caller).
double bessel_large_arg_log(double nu, double s) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 0; k < 60; ++k) {
    const double num = mu - (2.0 * k + 1.0) * (2.0 * k + 1.0);
    const double next = -term * num / (8.0 * s * (k + 1.0));
    if (std::fabs(next) >= std::fabs(term)) break;  // past optimal truncation
    term = next;
    sum += term;
    if (std::fabs(term) < 1e-17 * std::fabs(sum)) break;
  }
  return s - 0.5 * std::log(2.0 * kPi * s) + std::log(sum);
}

// Olver's uniform large-order asymptotic, I_nu(nu z) for large nu, any z.
double bessel_uniform_log(double nu, double s) {
  const double z = s / nu;
  const double w = std::hypot(1.0, z);          // sqrt(1+z^2)
  const double eta = w + std::log(z / (1.0 + w));
  const double tt = 1.0 / w;
  const double t2 = tt * tt;
  const double u1 = tt * (3.0 - 5.0 * t2) / 24.0;
  const double u2 = t2 * (81.0 + t2 * (-462.0 + t2 * 385.0)) / 1152.0;
  const double u3 = tt * t2 *
                    (30375.0 +
                     t2 * (-369603.0 + t2 * (765765.0 - t2 * 425425.0))) /
                    414720.0;
  const double u4 =
      t2 * t2 *
      (4465125.0 +
       t2 * (-94121676.0 +
             t2 * (349922430.0 + t2 * (-446185740.0 + t2 * 185910725.0)))) /
      39813120.0;
  const double series =
      1.0 + u1 / nu + u2 / (nu * nu) + u3 / (nu * nu * nu) +
      u4 / (nu * nu * nu * nu);
  return nu * eta - 0.5 * std::log(2.0 * kPi * nu) - 0.5 * std::log(w) +
         std::log(series);
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x))
    throw std::domain_error(std::string(what) + ": input must be finite");
}

}  // namespace

double q_function(double x) {
  require_finite(x, "q_function");
  return 0.5 * erfc_cody(x * 0.70710678118654752440);
}

double normal_cdf(double x) {
  require_finite(x, "normal_cdf");
  return 0.5 * erfc_cody(-x * 0.70710678118654752440);
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * 0.39894228040143267794;
}

double q_inverse(double p) {
  if (!std::isfinite(p) || p <= 0.0 || p >= 1.0)
    throw std::domain_error("q_inverse: requires 0 < p < 1");
  // Work on the small tail: Q(x) - p cancels badly when p is near 1, while
  // 1 - p is exact for p >= 0.5 and the symmetry Q(-x) = 1 - Q(x) is exact.
  if (p > 0.5) return -q_inverse(1.0 - p);
  double x = -inverse_normal_cdf_seed(p);
  // One Newton step against the high-accuracy forward map.
  const double pdf = normal_pdf(x);
  if (pdf > 1e-280) {
    const double err = q_function(x) - p;
    x += err / pdf;
  }
  return x;
}

double bessel_i_log(double nu, double s) {
  if (!std::isfinite(nu) || !std::isfinite(s) || nu < 0.0 || s < 0.0)
    throw std::domain_error("bessel_i_log: requires finite nu >= 0, s >= 0");
  if (s == 0.0) return nu == 0.0 ? 0.0 : -kInf;
  if (nu >= 150.0) return bessel_uniform_log(nu, s);
  if (s >= 50.0 && 4.0 * nu * nu <= 0.5 * s) return bessel_large_arg_log(nu, s);
  return bessel_series_log(nu, s, false);
}

double bessel_i_log_normalized(double nu, double s) {
  if (!std::isfinite(nu) || !std::isfinite(s) || nu < 0.0 || s < 0.0)
    throw std::domain_error(
        "bessel_i_log_normalized: requires finite nu >= 0, s >= 0");
  if (s == 0.0) return -std::lgamma(nu + 1.0);
  if (nu >= 150.0 || (s >= 50.0 && 4.0 * nu * nu <= 0.5 * s))
    return bessel_i_log(nu, s) - nu * std::log(0.5 * s);
  return bessel_series_log(nu, s, true);
}

double log_sum_exp(std::span<const double> log2_values) {
  if (log2_values.empty())
    throw std::domain_error("log_sum_exp: requires a non-empty list");
  Log2SumAccumulator acc;
  for (double v : log2_values) acc.add(v);
  return acc.result();
}

void Log2SumAccumulator::add(double v) {
  if (std::isnan(v) || v == kInf)
    throw std::domain_error("log_sum_exp: entries must be < +infinity");
  ++count_;
  if (v == -kInf) return;  // adds zero mass
  if (count_ == 1 || sum_ == 0.0) {
    max_ = v;
    sum_ = 1.0;
    return;
  }
  if (v <= max_) {
    sum_ += std::exp2(v - max_);
  } else {
    sum_ = sum_ * std::exp2(max_ - v) + 1.0;
    max_ = v;
  }
}

double Log2SumAccumulator::result() const {
  if (count_ == 0 || sum_ == 0.0) return -kInf;
  return max_ + std::log2(sum_);
}

namespace {
// Largest v with 2^v finite in double.
constexpr double kMaxLog2 = 1023.9;
}  // namespace

LogLayered LogLayered::from_linear(double x) {
  require_finite(x, "LogLayered");
  return LogLayered(Layer::linear, x);
}
LogLayered LogLayered::from_log2(double v) {
  require_finite(v, "LogLayered");
  return LogLayered(Layer::log, v);
}
LogLayered LogLayered::from_log2log2(double v) {
  require_finite(v, "LogLayered");
  return LogLayered(Layer::loglog, v);
}

const char* layer_name(Layer layer) {
  switch (layer) {
    case Layer::linear: return "linear";
    case Layer::log: return "log";
    case Layer::loglog: return "loglog";
  }
  return "?";
}

LogLayered LogLayered::promoted() const {
  switch (layer_) {
    case Layer::linear:
      if (value_ <= 0.0)
        throw std::domain_error(
            "LogLayered::promoted: linear->log requires a positive value");
      return LogLayered(Layer::log, std::log2(value_));
    case Layer::log:
      if (value_ <= 0.0)
        throw std::domain_error(
            "LogLayered::promoted: log->loglog requires quantity > 1");
      return LogLayered(Layer::loglog, std::log2(value_));
    case Layer::loglog:
      throw std::domain_error("LogLayered::promoted: already at loglog layer");
  }
  throw std::domain_error("LogLayered::promoted: bad layer");
}

bool LogLayered::demotable() const {
  return layer_ != Layer::linear && value_ <= kMaxLog2;
}

LogLayered LogLayered::demoted() const {
  switch (layer_) {
    case Layer::linear:
      throw std::domain_error("LogLayered::demoted: already at linear layer");
    case Layer::log:
      if (value_ > kMaxLog2)
        throw std::domain_error(
            "LogLayered::demoted: log->linear would overflow (log2 value " +
            std::to_string(value_) + " exceeds double range)");
      return LogLayered(Layer::linear, std::exp2(value_));
    case Layer::loglog:
      if (value_ > kMaxLog2)
        throw std::domain_error(
            "LogLayered::demoted: loglog->log would overflow (log2log2 "
            "value " +
            std::to_string(value_) + " exceeds double range)");
      return LogLayered(Layer::log, std::exp2(value_));
  }
  throw std::domain_error("LogLayered::demoted: bad layer");
}

double LogLayered::as_linear() const {
  LogLayered v = *this;
  while (v.layer_ != Layer::linear) v = v.demoted();
  return v.value_;
}

double LogLayered::log2_value() const {
  switch (layer_) {
    case Layer::linear:
      if (value_ <= 0.0)
        throw std::domain_error(
            "LogLayered::log2_value: requires a positive quantity");
      return std::log2(value_);
    case Layer::log:
      return value_;
    case Layer::loglog:
      return demoted().value();
  }
  throw std::domain_error("LogLayered::log2_value: bad layer");
}

double LogLayered::log2log2_value() const {
  switch (layer_) {
    case Layer::linear:
    case Layer::log: {
      const double l2 = log2_value();
      if (l2 <= 0.0)
        throw std::domain_error(
            "LogLayered::log2log2_value: requires quantity > 1");
      return std::log2(l2);
    }
    case Layer::loglog:
      return value_;
  }
  throw std::domain_error("LogLayered::log2log2_value: bad layer");
}

}  // namespace ridkit
