#include "ridkit/shell_quant.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ridkit {

namespace {

constexpr double kTwoPi = 6.28318530717958647693;
constexpr double kLog2Pi = 1.6514961294723187980;  // log2(pi)

double sq_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

void format17(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

QuantizerSpec QuantizerSpec::make(int n, double theta, double radius) {
  if (n < 2) throw std::domain_error("QuantizerSpec: requires n >= 2");
  if (!(theta > 0.0) || theta > kPi || !std::isfinite(theta))
    throw std::domain_error("QuantizerSpec: requires 0 < theta <= pi");
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw std::domain_error("QuantizerSpec: requires radius > 0");
  const double pb = std::ceil(kPi / theta);
  const double ab = std::ceil(kTwoPi / theta);
  if (ab > 2147483647.0)
    throw std::domain_error(
        "QuantizerSpec: theta too small to materialize per-axis bins");
  QuantizerSpec q;
  q.n = n;
  q.theta = theta;
  q.radius = radius;
  q.polar_bins = int(pb);
  q.azimuthal_bins = int(ab);
  return q;
}

std::vector<double> sample_shell(const ChannelSpec& spec, RngStream& rng) {
  std::vector<double> x(spec.n);
  double norm = 0.0;
  do {
    for (auto& v : x) v = rng.next_normal();
    norm = std::sqrt(sq_norm(x));
  } while (norm < 1e-12);
  const double scale = spec.shell_radius() / norm;
  for (auto& v : x) v *= scale;
  return x;
}

SphericalCoords to_spherical(std::span<const double> x) {
  const int n = int(x.size());
  if (n < 2) throw std::domain_error("to_spherical: requires n >= 2");
  SphericalCoords sc;
  sc.radius = std::sqrt(sq_norm(x));
  if (sc.radius <= 0.0)
    throw std::domain_error("to_spherical: requires a nonzero point");
  sc.angles.resize(n - 1);
  // tail[k] = ||(x_{k+1}, ..., x_{n-1})||, accumulated from the right so each
  // polar angle is atan2(tail, x_k) in [0, pi].
  double tail2 = x[n - 1] * x[n - 1];
  sc.angles[n - 2] = std::atan2(x[n - 1], x[n - 2]);
  if (sc.angles[n - 2] < 0.0) sc.angles[n - 2] += kTwoPi;
  tail2 += x[n - 2] * x[n - 2];
  for (int k = n - 3; k >= 0; --k) {
    sc.angles[k] = std::atan2(std::sqrt(tail2), x[k]);
    tail2 += x[k] * x[k];
  }
  return sc;
}

std::vector<double> from_spherical(double radius,
                                   std::span<const double> angles) {
  if (angles.empty())
    throw std::domain_error("from_spherical: requires at least one angle");
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw std::domain_error("from_spherical: requires radius > 0");
  const int n = int(angles.size()) + 1;
  for (int k = 0; k + 1 < n - 1; ++k)
    if (angles[k] < 0.0 || angles[k] > kPi)
      throw std::domain_error(
          "from_spherical: polar angles must lie in [0, pi]");
  std::vector<double> x(n);
  double sines = radius;
  for (int k = 0; k < n - 1; ++k) {
    x[k] = sines * std::cos(angles[k]);
    sines *= std::sin(angles[k]);
  }
  x[n - 1] = sines;
  return x;
}

namespace {

int bin_of(double angle, double theta, int bins) {
  // Ties at bin edges go to the lower bin: bin i covers (i*theta, (i+1)*theta].
  const double b = std::ceil(angle / theta) - 1.0;
  return int(std::clamp(b, 0.0, double(bins - 1)));
}

}  // namespace

SectorIndex sector_of(const QuantizerSpec& spec, std::span<const double> x) {
  if (int(x.size()) != spec.n)
    throw std::domain_error("sector_of: point length must equal n");
  const SphericalCoords sc = to_spherical(x);
  SectorIndex idx(spec.n - 1);
  for (int k = 0; k < spec.n - 2; ++k)
    idx[k] = bin_of(sc.angles[k], spec.theta, spec.polar_bins);
  idx[spec.n - 2] =
      bin_of(sc.angles[spec.n - 2], spec.theta, spec.azimuthal_bins);
  return idx;
}

std::vector<double> sector_center(const QuantizerSpec& spec,
                                  const SectorIndex& idx) {
  if (int(idx.size()) != spec.n - 1)
    throw std::domain_error("sector_center: index length must equal n-1");
  std::vector<double> angles(spec.n - 1);
  for (int k = 0; k < spec.n - 2; ++k) {
    if (idx[k] < 0 || idx[k] >= spec.polar_bins)
      throw std::domain_error("sector_center: polar index out of range");
    double m = (idx[k] + 0.5) * spec.theta;
    if (m > kPi) m = 0.5 * (idx[k] * spec.theta + kPi);  // last partial bin
    angles[k] = m;
  }
  const int a = idx[spec.n - 2];
  if (a < 0 || a >= spec.azimuthal_bins)
    throw std::domain_error("sector_center: azimuthal index out of range");
  double m = (a + 0.5) * spec.theta;
  if (m >= kTwoPi) m = 0.5 * (a * spec.theta + kTwoPi);
  angles[spec.n - 2] = m;
  return from_spherical(spec.radius, angles);
}

LogLayered sector_count(const QuantizerSpec& spec) {
  const double log2_count = (spec.n - 2) * std::log2(double(spec.polar_bins)) +
                            std::log2(double(spec.azimuthal_bins));
  if (log2_count <= 52.0) {
    // Exact integer is representable: compute it by repeated multiplication.
    double total = spec.azimuthal_bins;
    for (int k = 0; k < spec.n - 2; ++k) total *= spec.polar_bins;
    return LogLayered::from_linear(total);
  }
  return LogLayered::from_log2(log2_count);
}

double sector_count_log2_ideal(int n, double theta) {
  if (n < 2) throw std::domain_error("sector_count_log2_ideal: requires n >= 2");
  if (!(theta > 0.0) || !std::isfinite(theta))
    throw std::domain_error("sector_count_log2_ideal: requires theta > 0");
  const double per_axis = kLog2Pi - std::log2(theta);  // log2(pi / theta)
  return (n - 2) * per_axis + 1.0 + per_axis;          // * (2 pi / theta)
}

double sector_growth_ratio(int n) {
  if (n < 3) throw std::domain_error("sector_growth_ratio: requires n >= 3");
  // Idealized count at theta = exp(-n).  That theta underflows double for
  // n >~ 745, so substitute log2(theta) = -n*log2(e) algebraically:
  // log2(count) = 1 + (n-1)*log2(pi) + n*(n-1)*log2(e).
  const double log2_count =
      1.0 + (n - 1.0) * kLog2Pi + double(n) * (n - 1.0) * kLog2E;
  return std::log2(log2_count) / std::log2(double(n));
}

QuantizedDistribution quantize_distribution(
    std::span<const WeightedSample> samples, const QuantizerSpec& spec) {
  if (samples.empty())
    throw std::domain_error("quantize_distribution: requires samples");
  double total = 0.0;
  const double r2 = spec.radius * spec.radius;
  for (const auto& s : samples) {
    if (int(s.point.size()) != spec.n)
      throw std::domain_error(
          "quantize_distribution: sample length must equal n");
    if (!(s.weight >= 0.0))
      throw std::domain_error(
          "quantize_distribution: weights must be nonnegative");
    if (std::fabs(sq_norm(s.point) - r2) > 1e-6 * std::max(1.0, r2))
      throw std::domain_error(
          "quantize_distribution: requires samples on the shell "
          "(||x||^2 = radius^2 within 1e-6)");
    total += s.weight;
  }
  if (std::fabs(total - 1.0) > 1e-9)
    throw std::domain_error(
        "quantize_distribution: weights must sum to 1 within 1e-9");

  QuantizedDistribution out;
  out.spec = spec;
  // Track, per sector, whether every sample that landed there is the same
  // point; if so the representative snaps to that point (lossless sector).
  std::map<SectorIndex, const WeightedSample*> single;
  for (const auto& s : samples) {
    SectorIndex idx = sector_of(spec, s.point);
    out.mass[idx] += s.weight;
    auto [it, fresh] = single.emplace(idx, &s);
    if (!fresh && it->second != nullptr &&
        it->second->point != s.point)
      it->second = nullptr;
  }
  for (const auto& [idx, atom] : single)
    out.representative[idx] =
        atom != nullptr ? atom->point : sector_center(spec, idx);
  return out;
}

double gaussian_kl(std::span<const double> x, std::span<const double> u) {
  if (x.size() != u.size())
    throw std::domain_error("gaussian_kl: points must have equal length");
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - u[i];
    d2 += d * d;
  }
  return 0.5 * d2;  // nats
}

double pinsker_tv_bound(double kl_nats) {
  if (!(kl_nats >= 0.0) || !std::isfinite(kl_nats))
    throw std::domain_error("pinsker_tv_bound: requires finite KL >= 0");
  return std::min(2.0, std::sqrt(2.0 * kl_nats));
}

QuantizationTvReport quantization_tv_report(
    std::span<const WeightedSample> samples, const QuantizerSpec& qspec,
    const ChannelSpec& cspec, std::uint64_t trials, const RngStream& rng,
    unsigned workers) {
  if (cspec.n != qspec.n)
    throw std::domain_error(
        "quantization_tv_report: channel and quantizer dimensions differ");
  const QuantizedDistribution q = quantize_distribution(samples, qspec);

  QuantizationTvReport rep;
  // Mass-weighted worst case over each sector's actual support.
  double bound = 0.0, bound_scaled = 0.0;
  for (const auto& s : samples) {
    if (s.weight == 0.0) continue;
    const SectorIndex idx = sector_of(qspec, s.point);
    const double kl = gaussian_kl(s.point, q.representative.at(idx));
    bound += s.weight * pinsker_tv_bound(kl);
    bound_scaled += s.weight * pinsker_tv_bound(kl * cspec.n);
  }
  rep.bound = bound;
  rep.bound_scaled_kl = bound_scaled;
  rep.closed_form_at_exp_theta = std::sqrt(cspec.power) *
                                 std::pow(double(cspec.n), 1.5) *
                                 std::exp(-double(cspec.n));

  // Channel-output mixtures of the original atoms vs. the representatives.
  std::vector<const WeightedSample*> atoms;
  std::vector<double> cum;
  for (const auto& s : samples)
    if (s.weight > 0.0) {
      atoms.push_back(&s);
      cum.push_back((cum.empty() ? 0.0 : cum.back()) + s.weight);
    }
  // One mixture component per occupied sector, ordered by first occurrence
  // in the atom list so that a lossless quantization (every representative
  // equal to its atom) evaluates identically to log_p and the distance is
  // exactly zero.
  std::vector<std::pair<std::vector<double>, double>> reps;
  std::map<SectorIndex, bool> seen;
  for (const auto* a : atoms) {
    const SectorIndex idx = sector_of(qspec, a->point);
    if (!seen.emplace(idx, true).second) continue;
    reps.push_back({q.representative.at(idx), q.mass.at(idx)});
  }

  LogDensityFn log_p = [&](std::span<const double> y) {
    Log2SumAccumulator acc;
    for (const auto* a : atoms)
      acc.add(std::log2(a->weight) + channel_log_density(cspec, a->point, y));
    return acc.result();
  };
  LogDensityFn log_q = [&](std::span<const double> y) {
    Log2SumAccumulator acc;
    for (const auto& [rep_pt, m] : reps)
      acc.add(std::log2(m) + channel_log_density(cspec, rep_pt, y));
    return acc.result();
  };
  SamplerFn sample_p = [&](RngStream& r, std::span<double> y) {
    const double u = r.next_unit();
    const std::size_t k =
        std::lower_bound(cum.begin(), cum.end(), u * cum.back()) - cum.begin();
    const auto& pt = atoms[std::min(k, atoms.size() - 1)]->point;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = pt[i] + r.next_normal();
  };
  rep.empirical =
      tv_estimate(log_p, log_q, sample_p, cspec.n, trials, rng, workers);
  return rep;
}

void save_quantized(const QuantizedDistribution& dist, std::ostream& out) {
  std::string buf;
  buf += "quantized-distribution 1\n";
  buf += "n " + std::to_string(dist.spec.n) + "\n";
  buf += "theta ";
  format17(buf, dist.spec.theta);
  buf += "\nradius ";
  format17(buf, dist.spec.radius);
  buf += "\nsectors " + std::to_string(dist.mass.size()) + "\n";
  for (const auto& [idx, m] : dist.mass) {
    for (int b : idx) buf += std::to_string(b) + " ";
    format17(buf, m);
    for (double c : dist.representative.at(idx)) {
      buf += " ";
      format17(buf, c);
    }
    buf += "\n";
  }
  out << buf;
}

QuantizedDistribution load_quantized(std::istream& in) {
  auto fail = [](const std::string& why) -> std::runtime_error {
    return std::runtime_error("load_quantized: malformed input: " + why);
  };
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "quantized-distribution" ||
      version != 1)
    throw fail("bad header");
  std::string key;
  int n = 0;
  double theta = 0.0, radius = 0.0;
  std::size_t sectors = 0;
  for (int i = 0; i < 4; ++i) {
    if (!(in >> key)) throw fail("truncated header");
    if (key == "n") in >> n;
    else if (key == "theta") in >> theta;
    else if (key == "radius") in >> radius;
    else if (key == "sectors") in >> sectors;
    else throw fail("unknown header key " + key);
  }
  if (!in) throw fail("bad header values");
  QuantizedDistribution dist;
  dist.spec = QuantizerSpec::make(n, theta, radius);
  for (std::size_t s = 0; s < sectors; ++s) {
    SectorIndex idx(n - 1);
    for (auto& b : idx)
      if (!(in >> b)) throw fail("truncated sector index");
    double m = 0.0;
    if (!(in >> m)) throw fail("truncated mass");
    std::vector<double> rep(n);
    for (auto& c : rep)
      if (!(in >> c)) throw fail("truncated representative");
    dist.mass[idx] = m;
    dist.representative[idx] = std::move(rep);
  }
  return dist;
}

}  // namespace ridkit
