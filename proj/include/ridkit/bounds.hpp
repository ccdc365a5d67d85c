#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ridkit/channel.hpp"
#include "ridkit/numerics.hpp"

namespace ridkit {

// Shannon capacity of the power-P AWGN channel, bits per use.
double capacity(double power);

// Channel dispersion, bits^2 per use: (log2 e)^2 * P(P+2) / (2(P+1)^2).
double dispersion(double power);

// Two-term normal approximation n*C - sqrt(n*V) * Qinv(eps), plus which
// scale the approximated quantity lives at: loglog of the code size for
// identification, log of the code size for transmission.  The neglected
// remainder is O(log n) in both cases.
struct SecondOrderEstimate {
  double value = 0.0;
  double first_term = 0.0;   // n * C
  double second_term = 0.0;  // -sqrt(n * V) * Qinv(eps)
  Layer scale = Layer::loglog;
  std::string residual_model = "O(log n)";
};

SecondOrderEstimate id_second_order(const ChannelSpec& spec, double eps);
SecondOrderEstimate transmission_second_order(const ChannelSpec& spec,
                                              double eps);

// Code count N = floor(exp(tau*M) / (M*e)) supported by a pool of M
// transmission codewords when identifiers are random tau*M-out-of-M subsets.
// Evaluated exactly while exp(tau*M) fits a double, in the log domain
// beyond that (where the floor is a no-op at double precision).
LogLayered lemma1_code_size(double pool_size, double tau);
// Same, but the pool size is given as log2(M) for pools too large to
// materialize.
LogLayered lemma1_code_size_log2(double log2_pool_size, double tau);

struct PlanConstraint {
  std::string name;
  bool satisfied = false;
};

// Concrete parameter choices that realize the achievability side at finite
// n, together with the error bounds they certify.  Fields downstream of an
// unsatisfied constraint are left empty.
struct AchievabilityPlan {
  int n = 0;
  double power = 0.0;
  double eps = 0.0;      // target type-I error
  double berry_b = 0.0;  // Berry-Esseen constant used for the CLT correction

  // Slack parameters: c*d inflates the type-I bound, c'*d' the type-II
  // bound, tau is the subset density, zeta the direct type-II slack,
  // f = 1 - 1/d - 1/d' the usable fraction of the pool.
  double c = 0.0, c_prime = 0.0, d = 0.0, d_prime = 0.0;
  double tau = 0.0, zeta = 0.0, f = 0.0;

  double capacity_bits = 0.0;
  double dispersion_bits2 = 0.0;

  std::optional<double> kappa;     // Qinv(eps/(cd) - B/sqrt(n))
  std::optional<double> log2_pool_threshold;  // log2 K = nC - kappa*sqrt(nV)
  std::optional<LogLayered> pool_size;        // M = ceil(K / (n+2)^4)
  std::optional<LogLayered> code_size;        // N = floor(exp(tau M)/(M e))

  std::optional<double> eps_bound;    // c*d*(Q(kappa) + B/sqrt(n))
  double delta_bound = 0.0;           // zeta + 2/(n+2), the closed display form
  std::optional<double> delta_bound_exact;  // zeta + c'd' * ceil(M/f) / K

  std::vector<PlanConstraint> constraints;
  bool feasible = false;
  std::vector<std::string> violated() const;
};

// Instantiate the finite-n achievability construction for a target type-I
// error eps, using berry_b as the Berry-Esseen constant for the information
// density at this channel.
AchievabilityPlan plan_achievability(const ChannelSpec& spec, double eps,
                                     double berry_b);

// Outer bound on loglog of the code size from the sphere-quantization
// argument.  Requires eps + delta + sqrt(P) n^(3/2) exp(-n) < 1.
struct ConverseResult {
  double value = 0.0;        // n C - sqrt(n V) Qinv(eps + shift)
  double first_term = 0.0;
  double second_term = 0.0;
  double shift = 0.0;        // sqrt(P) * n^(3/2) * exp(-n)
  double adjusted_eps = 0.0; // eps + shift
  double xi = 0.0;           // 1 - eps - delta - shift
  std::string residual_model = "O(log n)";
};

ConverseResult converse_bound(const ChannelSpec& spec, double eps,
                              double delta);

// One blocklength of the three-way comparison: realized achievability plan,
// two-term approximation, and converse, all on the loglog(code size) scale.
// Gaps are normalized by log2(n), the scale of the neglected remainder.
struct SandwichRow {
  int n = 0;
  bool feasible = false;
  std::string error;         // empty unless this row failed
  double achievability = 0.0;
  double approximation = 0.0;
  double converse = 0.0;
  double gap_approximation = 0.0;  // (approximation - achievability) / log2 n
  double gap_converse = 0.0;       // (converse - achievability) / log2 n
  double delta_bound = 0.0;        // type-II bound certified by the plan
};

// Runs the comparison across blocklengths.  Per-row failures (infeasible
// plan, converse precondition) are recorded in the row and do not abort the
// remaining rows.
std::vector<SandwichRow> sandwich_report(std::span<const int> ns, double power,
                                         double eps, double berry_b);

}  // namespace ridkit
