#include "ridkit/bounds.hpp"

#include <cmath>
#include <stdexcept>

namespace ridkit {

namespace {

constexpr double kE = 2.71828182845904523536;

void check_eps(double eps, const char* who) {
  if (!std::isfinite(eps) || eps <= 0.0 || eps >= 1.0)
    throw std::domain_error(std::string(who) + ": requires 0 < eps < 1");
}

}  // namespace

double capacity(double power) {
  if (!std::isfinite(power) || power < 0.0)
    throw std::domain_error("capacity: requires finite power >= 0");
  return 0.5 * std::log2(1.0 + power);
}

double dispersion(double power) {
  if (!std::isfinite(power) || power < 0.0)
    throw std::domain_error("dispersion: requires finite power >= 0");
  const double p1 = 1.0 + power;
  return kLog2E * kLog2E * power * (power + 2.0) / (2.0 * p1 * p1);
}

namespace {

SecondOrderEstimate second_order(const ChannelSpec& spec, double eps,
                                 Layer scale) {
  check_eps(eps, "second_order");
  SecondOrderEstimate r;
  r.first_term = spec.n * capacity(spec.power);
  r.second_term =
      -std::sqrt(spec.n * dispersion(spec.power)) * q_inverse(eps);
  r.value = r.first_term + r.second_term;
  r.scale = scale;
  return r;
}

}  // namespace

SecondOrderEstimate id_second_order(const ChannelSpec& spec, double eps) {
  return second_order(spec, eps, Layer::loglog);
}

SecondOrderEstimate transmission_second_order(const ChannelSpec& spec,
                                              double eps) {
  return second_order(spec, eps, Layer::log);
}

LogLayered lemma1_code_size(double pool_size, double tau) {
  if (!std::isfinite(pool_size) || pool_size < 1.0)
    throw std::domain_error("lemma1_code_size: requires pool size M >= 1");
  if (!std::isfinite(tau) || tau <= 0.0 || tau >= 1.0)
    throw std::domain_error("lemma1_code_size: requires 0 < tau < 1");
  const double t = tau * pool_size;
  if (t <= 700.0) {
    // exp(t) is comfortably inside double range: evaluate and floor exactly.
    return LogLayered::from_linear(
        std::floor(std::exp(t) / (pool_size * kE)));
  }
  return lemma1_code_size_log2(std::log2(pool_size), tau);
}

LogLayered lemma1_code_size_log2(double log2_pool_size, double tau) {
  if (!std::isfinite(log2_pool_size) || log2_pool_size < 0.0)
    throw std::domain_error(
        "lemma1_code_size_log2: requires log2(pool size) >= 0");
  if (!std::isfinite(tau) || tau <= 0.0 || tau >= 1.0)
    throw std::domain_error("lemma1_code_size_log2: requires 0 < tau < 1");
  const double log2_t = std::log2(tau) + log2_pool_size;
  if (log2_t > 1000.0) {
    // Even log2(N) overflows a double; the -1 and -log2(M) corrections are
    // below resolution at this magnitude, so N = 2^(2^v) with
    // v = log2(tau*M*log2(e)).
    return LogLayered::from_log2log2(log2_t + std::log2(kLog2E));
  }
  const double t = std::exp2(log2_t);
  const double log2_n = (t - 1.0) * kLog2E - log2_pool_size;
  if (log2_n <= 52.0) {
    // Small enough that the floor is visible: materialize it.
    return LogLayered::from_linear(std::floor(std::exp2(log2_n)));
  }
  // Floor is a no-op at double precision here.
  return LogLayered::from_log2(log2_n);
}

std::vector<std::string> AchievabilityPlan::violated() const {
  std::vector<std::string> out;
  for (const auto& c : constraints)
    if (!c.satisfied) out.push_back(c.name);
  return out;
}

AchievabilityPlan plan_achievability(const ChannelSpec& spec, double eps,
                                     double berry_b) {
  check_eps(eps, "plan_achievability");
  if (!std::isfinite(berry_b) || berry_b <= 0.0)
    throw std::domain_error("plan_achievability: requires berry_b > 0");

  AchievabilityPlan p;
  p.n = spec.n;
  p.power = spec.power;
  p.eps = eps;
  p.berry_b = berry_b;

  const double n = double(spec.n);
  p.c = 1.0 + 2.0 / n;
  p.d = p.c;
  p.c_prime = n + 2.0;
  p.d_prime = p.c_prime;
  p.tau = 1.0 / (n + 2.0);
  p.zeta = 2.0 / std::log2(n);  // +inf at n = 1; caught below
  p.f = 1.0 - 1.0 / p.d - 1.0 / p.d_prime;

  p.capacity_bits = capacity(spec.power);
  p.dispersion_bits2 = dispersion(spec.power);

  auto add = [&](std::string name, bool ok) {
    p.constraints.push_back({std::move(name), ok});
    return ok;
  };

  bool ok = true;
  ok &= add("0 < tau < 1/3", p.tau > 0.0 && p.tau < 1.0 / 3.0);
  ok &= add("0 < zeta < 1", p.zeta > 0.0 && p.zeta < 1.0);
  ok &= add("zeta * log2(1/tau - 1) > 2",
            std::isfinite(p.zeta) &&
                p.zeta * std::log2(1.0 / p.tau - 1.0) > 2.0);
  ok &= add("1/c + 1/c' < 1", 1.0 / p.c + 1.0 / p.c_prime < 1.0);
  ok &= add("f = 1 - 1/d - 1/d' > 0", p.f > 0.0);

  // Type-I side: the CLT target eps/(cd) must survive the Berry-Esseen
  // correction B/sqrt(n) with room to take a quantile.
  const double kappa_arg = eps / (p.c * p.d) - berry_b / std::sqrt(n);
  const bool kappa_ok = kappa_arg > 0.0 && kappa_arg < 1.0;
  ok &= add("eps/(c*d) - B/sqrt(n) in (0,1)", kappa_ok);

  p.delta_bound = p.zeta + 2.0 / (n + 2.0);

  if (kappa_ok) {
    p.kappa = q_inverse(kappa_arg);
    const double log2_k =
        n * p.capacity_bits -
        *p.kappa * std::sqrt(n * p.dispersion_bits2);
    p.log2_pool_threshold = log2_k;
    p.eps_bound =
        p.c * p.d * (q_function(*p.kappa) + berry_b / std::sqrt(n));

    // M = ceil(K / (n+2)^4); exact while the ratio is representable,
    // log-domain (where ceil is a no-op) beyond that.
    const double log2_ratio = log2_k - 4.0 * std::log2(n + 2.0);
    if (log2_ratio <= 52.0) {
      const double m = std::max(1.0, std::ceil(std::exp2(log2_ratio)));
      p.pool_size = LogLayered::from_linear(m);
      p.code_size = lemma1_code_size(m, p.tau);
    } else {
      p.pool_size = LogLayered::from_log2(log2_ratio);
      p.code_size = lemma1_code_size_log2(log2_ratio, p.tau);
    }

    // Exact type-II bound zeta + c'd' * ceil(M/f)/K, evaluated in the log
    // domain; may underflow to zeta, which is the honest limit.
    const double log2_m = p.pool_size->log2_value();
    const double log2_tail = std::log2(p.c_prime * p.d_prime) + log2_m +
                             std::log2(n + 2.0) - log2_k;
    const double tail = std::exp2(log2_tail);
    p.delta_bound_exact = p.zeta + tail;

    // Combined feasibility: the two error-bound mechanisms must leave room
    // for each other (normal-approximation proxy for the tail probability).
    ok &= add("cd*(Q(kappa) + B/sqrt(n)) + c'd'*ceil(M/f)/K < 1",
              *p.eps_bound + tail < 1.0);

    // A plan whose pool yields fewer than two identifiers certifies nothing.
    bool n_ok = false;
    if (p.code_size->layer() != Layer::linear ||
        p.code_size->value() >= 2.0)
      n_ok = true;
    ok &= add("code size N >= 2", n_ok);
  } else {
    ok &= add("cd*(Q(kappa) + B/sqrt(n)) + c'd'*ceil(M/f)/K < 1", false);
    ok &= add("code size N >= 2", false);
  }

  p.feasible = ok;
  return p;
}

ConverseResult converse_bound(const ChannelSpec& spec, double eps,
                              double delta) {
  if (!std::isfinite(eps) || eps < 0.0 || !std::isfinite(delta) || delta < 0.0)
    throw std::domain_error("converse_bound: requires eps >= 0 and delta >= 0");
  const double n = double(spec.n);
  ConverseResult r;
  r.shift = std::sqrt(spec.power) * std::pow(n, 1.5) * std::exp(-n);
  r.xi = 1.0 - eps - delta - r.shift;
  if (!(r.xi > 0.0))
    throw std::domain_error(
        "converse_bound: requires eps + delta + sqrt(P) * n^(3/2) * exp(-n) "
        "< 1");
  r.adjusted_eps = eps + r.shift;
  if (r.adjusted_eps <= 0.0)
    throw std::domain_error(
        "converse_bound: requires eps + sqrt(P) * n^(3/2) * exp(-n) > 0");
  r.first_term = n * capacity(spec.power);
  r.second_term =
      -std::sqrt(n * dispersion(spec.power)) * q_inverse(r.adjusted_eps);
  r.value = r.first_term + r.second_term;
  return r;
}

std::vector<SandwichRow> sandwich_report(std::span<const int> ns, double power,
                                         double eps, double berry_b) {
  if (ns.empty())
    throw std::domain_error("sandwich_report: requires at least one n");
  std::vector<SandwichRow> rows;
  rows.reserve(ns.size());
  for (int n : ns) {
    SandwichRow row;
    row.n = n;
    try {
      const ChannelSpec spec = ChannelSpec::make(n, power);
      const AchievabilityPlan plan = plan_achievability(spec, eps, berry_b);
      row.delta_bound = plan.delta_bound;
      row.approximation = id_second_order(spec, eps).value;
      row.converse = converse_bound(spec, eps, plan.delta_bound).value;
      if (!plan.feasible) {
        row.error = "plan infeasible:";
        for (const auto& v : plan.violated()) row.error += " [" + v + "]";
        rows.push_back(row);
        continue;
      }
      row.achievability = plan.code_size->log2log2_value();
      const double l2n = std::log2(double(n));
      row.gap_approximation = (row.approximation - row.achievability) / l2n;
      row.gap_converse = (row.converse - row.achievability) / l2n;
      row.feasible = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ridkit
