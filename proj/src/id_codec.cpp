#include "ridkit/id_codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <stdexcept>

#include "ridkit/parallel.hpp"
#include "ridkit/shell_quant.hpp"

namespace ridkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Regularized incomplete beta via Lentz's continued fraction; the workhorse
// behind exact binomial intervals.
double beta_cont_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 3e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 400; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

double inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                          std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * beta_cont_fraction(a, b, x) / a;
  return 1.0 - front * beta_cont_fraction(b, a, 1.0 - x) / b;
}

double beta_quantile(double p, double a, double b) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (inc_beta(a, b, mid) < p) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

void check_message(const IdCode& code, int i, const char* who) {
  if (i < 0 || i >= code.messages)
    throw std::domain_error(std::string(who) + ": message index out of range");
}

// Draw one y through the channel from `message`'s encoder (uniform over its
// support) and return whether receiver `tested` accepts.
bool send_and_test(const IdCode& code, int message, int tested, RngStream& rng,
                   std::vector<double>& y) {
  const int pick =
      std::min(code.per_message - 1,
               int(rng.next_unit() * double(code.per_message)));
  const std::span<const double> c = code.codeword(message, pick);
  for (int i = 0; i < code.spec.n; ++i) y[i] = c[i] + rng.next_normal();
  return identify(code, tested, y);
}

ErrorEstimate exact_estimate(double value, std::uint64_t trials) {
  return ErrorEstimate{value, value, value, trials};
}

ErrorEstimate mc_binomial(const IdCode& code, int message, int tested,
                          bool count_accept, std::uint64_t trials,
                          const RngStream& rng, unsigned workers) {
  const std::uint64_t blocks = (trials + kMcBlock - 1) / kMcBlock;
  std::vector<std::uint64_t> hits(blocks, 0);
  run_blocks(trials, kMcBlock, workers, rng,
             [&](std::uint64_t b, std::uint64_t, std::uint64_t count,
                 RngStream& r) {
               std::vector<double> y(code.spec.n);
               std::uint64_t h = 0;
               for (std::uint64_t t = 0; t < count; ++t) {
                 const bool accept = send_and_test(code, message, tested, r, y);
                 if (accept == count_accept) ++h;
               }
               hits[b] = h;
             });
  std::uint64_t total = 0;
  for (std::uint64_t h : hits) total += h;
  ErrorEstimate e;
  e.value = double(total) / double(trials);
  e.trials = trials;
  const auto [lo, hi] = clopper_pearson(total, trials);
  e.ci_low = lo;
  e.ci_high = hi;
  return e;
}

void format17(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

std::pair<double, double> clopper_pearson(std::uint64_t successes,
                                          std::uint64_t trials) {
  if (trials == 0)
    throw std::domain_error("clopper_pearson: requires trials >= 1");
  if (successes > trials)
    throw std::domain_error("clopper_pearson: successes exceed trials");
  constexpr double alpha = 0.05;
  const double k = double(successes), t = double(trials);
  const double lo =
      successes == 0 ? 0.0 : beta_quantile(alpha / 2.0, k, t - k + 1.0);
  const double hi =
      successes == trials ? 1.0 : beta_quantile(1.0 - alpha / 2.0, k + 1.0, t - k);
  return {lo, hi};
}

const char* construction_name(IdConstruction c) {
  return c == IdConstruction::independent_pools ? "independent_pools"
                                                : "shared_pool_subsets";
}

IdConstruction construction_from_name(const std::string& name) {
  if (name == "independent_pools") return IdConstruction::independent_pools;
  if (name == "shared_pool_subsets") return IdConstruction::shared_pool_subsets;
  throw std::domain_error("unknown construction: " + name);
}

std::span<const double> IdCode::codeword(int message, int k) const {
  if (message < 0 || message >= messages)
    throw std::domain_error("IdCode::codeword: message index out of range");
  if (k < 0 || k >= per_message)
    throw std::domain_error("IdCode::codeword: codeword index out of range");
  const std::size_t stride = std::size_t(spec.n);
  if (construction == IdConstruction::independent_pools)
    return {codebooks.data() + (std::size_t(message) * per_message + k) * stride,
            stride};
  return {pool.data() + std::size_t(subsets[message][k]) * stride, stride};
}

IdCode build_id_code(const ChannelSpec& spec, const IdCodeParams& params,
                     RngStream& rng) {
  if (params.messages < 2)
    throw std::domain_error("build_id_code: requires messages >= 2");
  if (params.per_message < 1)
    throw std::domain_error("build_id_code: requires per_message >= 1");
  if (std::isnan(params.log2_threshold))
    throw std::domain_error("build_id_code: threshold must not be NaN");

  IdCode code;
  code.spec = spec;
  code.messages = params.messages;
  code.construction = params.construction;
  code.per_message = params.per_message;
  code.log2_threshold = params.log2_threshold;
  code.seed = rng.seed();
  code.stream_id = rng.stream_id();

  if (params.construction == IdConstruction::independent_pools) {
    code.codebooks.reserve(std::size_t(params.messages) * params.per_message *
                           spec.n);
    for (int i = 0; i < params.messages * params.per_message; ++i) {
      const std::vector<double> c = sample_shell(spec, rng);
      code.codebooks.insert(code.codebooks.end(), c.begin(), c.end());
    }
    return code;
  }

  // shared_pool_subsets
  if (params.pool_size < params.per_message)
    throw std::domain_error(
        "build_id_code: requires pool_size >= per_message (subset size)");
  code.pool_size = params.pool_size;
  // Distinct-subset capacity: messages <= C(pool_size, per_message),
  // compared in the log domain to dodge overflow.
  const double m = params.pool_size, t = params.per_message;
  const double log2_choose =
      (std::lgamma(m + 1.0) - std::lgamma(t + 1.0) - std::lgamma(m - t + 1.0)) *
      kLog2E;
  if (std::log2(double(params.messages)) > log2_choose + 1e-9)
    throw std::domain_error(
        "build_id_code: messages exceeds the number of distinct subsets "
        "C(pool_size, per_message)");
  code.pool.reserve(std::size_t(params.pool_size) * spec.n);
  for (int i = 0; i < params.pool_size; ++i) {
    const std::vector<double> c = sample_shell(spec, rng);
    code.pool.insert(code.pool.end(), c.begin(), c.end());
  }
  std::set<std::vector<std::int32_t>> seen;
  std::vector<std::int32_t> deck(params.pool_size);
  const std::uint64_t max_attempts =
      1000ull * std::uint64_t(params.messages) + 10000ull;
  std::uint64_t attempts = 0;
  while (int(code.subsets.size()) < params.messages) {
    if (++attempts > max_attempts)
      throw std::runtime_error(
          "build_id_code: rejection sampling for distinct subsets exceeded "
          "its attempt budget; choose messages well below C(pool_size, "
          "per_message)");
    // Partial Fisher-Yates: first per_message entries become the subset.
    for (int i = 0; i < params.pool_size; ++i) deck[i] = i;
    for (int i = 0; i < params.per_message; ++i) {
      const int j =
          i + std::min(params.pool_size - 1 - i,
                       int(rng.next_unit() * double(params.pool_size - i)));
      std::swap(deck[i], deck[j]);
    }
    std::vector<std::int32_t> subset(deck.begin(),
                                     deck.begin() + params.per_message);
    std::sort(subset.begin(), subset.end());
    if (seen.insert(subset).second) code.subsets.push_back(std::move(subset));
  }
  return code;
}

bool identify(const IdCode& code, int message, std::span<const double> y) {
  check_message(code, message, "identify");
  if (int(y.size()) != code.spec.n)
    throw std::domain_error("identify: y length must equal n");
  for (int k = 0; k < code.per_message; ++k)
    if (info_density(code.spec, code.codeword(message, k), y) >
        code.log2_threshold)
      return true;
  return false;
}

ErrorEstimate estimate_type1(const IdCode& code, int message,
                             std::uint64_t trials, const RngStream& rng,
                             unsigned workers) {
  check_message(code, message, "estimate_type1");
  if (trials < 100)
    throw std::domain_error("estimate_type1: requires trials >= 100");
  // Degenerate decoders are deterministic: no sampling uncertainty.
  if (code.log2_threshold == -kInf) return exact_estimate(0.0, trials);
  if (code.log2_threshold == kInf) return exact_estimate(1.0, trials);
  return mc_binomial(code, message, message, /*count_accept=*/false, trials,
                     rng, workers);
}

ErrorEstimate estimate_type2(const IdCode& code, int sent, int tested,
                             std::uint64_t trials, const RngStream& rng,
                             unsigned workers) {
  check_message(code, sent, "estimate_type2");
  check_message(code, tested, "estimate_type2");
  if (sent == tested)
    throw std::domain_error("estimate_type2: requires sent != tested");
  if (trials < 100)
    throw std::domain_error("estimate_type2: requires trials >= 100");
  if (code.log2_threshold == -kInf) return exact_estimate(1.0, trials);
  if (code.log2_threshold == kInf) return exact_estimate(0.0, trials);
  return mc_binomial(code, sent, tested, /*count_accept=*/true, trials, rng,
                     workers);
}

bool ErrorProfile::certifies(double eps, double delta) const {
  return max_type1.ci_high <= eps && max_type2.ci_high <= delta;
}

ErrorProfile code_error_profile(const IdCode& code,
                                std::uint64_t trials_per_pair,
                                const RngStream& rng, std::uint64_t budget,
                                unsigned workers) {
  const std::uint64_t pairs =
      std::uint64_t(code.messages) * std::uint64_t(code.messages - 1);
  const std::uint64_t required = pairs * trials_per_pair;
  if (required > budget)
    throw std::runtime_error(
        "code_error_profile: budget exceeded: messages*(messages-1)*"
        "trials_per_pair = " +
        std::to_string(required) + " > budget " + std::to_string(budget));

  ErrorProfile prof;
  prof.type1.reserve(code.messages);
  std::uint64_t stream = 0;
  for (int i = 0; i < code.messages; ++i) {
    const ErrorEstimate e =
        estimate_type1(code, i, trials_per_pair, rng.substream(stream++),
                       workers);
    if (i == 0 || e.value > prof.max_type1.value) {
      prof.max_type1 = e;
      prof.argmax_type1 = i;
    }
    prof.type1.push_back(e);
  }
  prof.type2.reserve(pairs);
  bool first = true;
  for (int i = 0; i < code.messages; ++i)
    for (int j = 0; j < code.messages; ++j) {
      if (i == j) continue;
      const ErrorEstimate e =
          estimate_type2(code, i, j, trials_per_pair, rng.substream(stream++),
                         workers);
      if (first || e.value > prof.max_type2.value) {
        prof.max_type2 = e;
        prof.argmax_type2_sent = i;
        prof.argmax_type2_tested = j;
        first = false;
      }
      prof.type2.push_back({i, j, e});
    }
  return prof;
}

void save_id_code(const IdCode& code, std::ostream& out) {
  std::string buf;
  buf += "id-code 1\n";
  buf += "n " + std::to_string(code.spec.n) + "\n";
  buf += "power ";
  format17(buf, code.spec.power);
  buf += "\nmessages " + std::to_string(code.messages) + "\n";
  buf += "construction " + std::string(construction_name(code.construction)) +
         "\n";
  buf += "per_message " + std::to_string(code.per_message) + "\n";
  buf += "pool_size " + std::to_string(code.pool_size) + "\n";
  buf += "log2_threshold ";
  format17(buf, code.log2_threshold);
  buf += "\nseed " + std::to_string(code.seed) + "\n";
  buf += "stream_id " + std::to_string(code.stream_id) + "\n";
  auto rows = [&](const std::vector<double>& flat) {
    const std::size_t stride = std::size_t(code.spec.n);
    for (std::size_t r = 0; r * stride < flat.size(); ++r) {
      for (std::size_t i = 0; i < stride; ++i) {
        if (i) buf += " ";
        format17(buf, flat[r * stride + i]);
      }
      buf += "\n";
    }
  };
  if (code.construction == IdConstruction::independent_pools) {
    rows(code.codebooks);
  } else {
    rows(code.pool);
    for (const auto& subset : code.subsets) {
      buf += "subset";
      for (std::int32_t idx : subset) buf += " " + std::to_string(idx);
      buf += "\n";
    }
  }
  out << buf;
}

IdCode load_id_code(std::istream& in) {
  auto fail = [](const std::string& why) -> std::runtime_error {
    return std::runtime_error("load_id_code: malformed input: " + why);
  };
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "id-code" || version != 1)
    throw fail("bad header");
  IdCode code;
  int n = 0;
  double power = 0.0;
  std::string key, cname;
  for (int i = 0; i < 9; ++i) {
    if (!(in >> key)) throw fail("truncated header");
    if (key == "n") in >> n;
    else if (key == "power") in >> power;
    else if (key == "messages") in >> code.messages;
    else if (key == "construction") in >> cname;
    else if (key == "per_message") in >> code.per_message;
    else if (key == "pool_size") in >> code.pool_size;
    else if (key == "log2_threshold") {
      // Read as a token: the threshold may be "inf"/"-inf", which stream
      // extraction of doubles does not accept.
      std::string tok;
      in >> tok;
      code.log2_threshold = std::strtod(tok.c_str(), nullptr);
    } else if (key == "seed") in >> code.seed;
    else if (key == "stream_id") in >> code.stream_id;
    else throw fail("unknown header key " + key);
  }
  if (!in) throw fail("bad header values");
  code.spec = ChannelSpec::make(n, power);
  code.construction = construction_from_name(cname);
  const std::size_t stride = std::size_t(n);
  if (code.construction == IdConstruction::independent_pools) {
    const std::size_t rows = std::size_t(code.messages) * code.per_message;
    code.codebooks.resize(rows * stride);
    for (auto& v : code.codebooks)
      if (!(in >> v)) throw fail("truncated codeword table");
  } else {
    code.pool.resize(std::size_t(code.pool_size) * stride);
    for (auto& v : code.pool)
      if (!(in >> v)) throw fail("truncated pool table");
    code.subsets.resize(code.messages);
    for (auto& subset : code.subsets) {
      std::string tag;
      if (!(in >> tag) || tag != "subset") throw fail("missing subset row");
      subset.resize(code.per_message);
      for (auto& idx : subset) {
        if (!(in >> idx)) throw fail("truncated subset row");
        if (idx < 0 || idx >= code.pool_size)
          throw fail("subset index out of range");
      }
    }
  }
  return code;
}

}  // namespace ridkit
