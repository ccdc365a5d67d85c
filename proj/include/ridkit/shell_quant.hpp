#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "ridkit/channel.hpp"
#include "ridkit/numerics.hpp"
#include "ridkit/resolvability.hpp"
#include "ridkit/rng.hpp"

namespace ridkit {

// Angular sector quantizer for the power shell in R^n (n >= 2): each of the
// n-2 polar angles [0,pi] and the azimuthal angle [0,2pi) is cut into bins
// of width theta, giving ceil(pi/theta)^(n-2) * ceil(2pi/theta) sectors.
struct QuantizerSpec {
  int n = 0;
  double theta = 0.0;
  double radius = 0.0;
  int polar_bins = 0;      // ceil(pi/theta)
  int azimuthal_bins = 0;  // ceil(2pi/theta)

  static QuantizerSpec make(int n, double theta, double radius);
};

// Bin index per angular coordinate; length n-1.  Ordered so it can key a map
// and serialize deterministically.
using SectorIndex = std::vector<std::int32_t>;

struct QuantizedDistribution {
  QuantizerSpec spec;
  // Sector -> probability mass, and sector -> representative point (on the
  // shell, length n).
  std::map<SectorIndex, double> mass;
  std::map<SectorIndex, std::vector<double>> representative;
};

// Point uniform on the shell of radius sqrt(n*power): a normal vector scaled
// to the shell.
std::vector<double> sample_shell(const ChannelSpec& spec, RngStream& rng);

struct SphericalCoords {
  double radius = 0.0;
  std::vector<double> angles;  // n-2 polar in [0,pi], then azimuthal [0,2pi)
};

// Spherical coordinates of x (n >= 2).  Zero-radius input is rejected;
// degenerate axis points get angle 0 on the undetermined coordinates.
SphericalCoords to_spherical(std::span<const double> x);
std::vector<double> from_spherical(double radius,
                                   std::span<const double> angles);

// Which sector x falls in.
SectorIndex sector_of(const QuantizerSpec& spec, std::span<const double> x);
// Center of the sector, projected onto the shell.
std::vector<double> sector_center(const QuantizerSpec& spec,
                                  const SectorIndex& idx);

// Total number of sectors, which explodes doubly-exponentially once theta
// shrinks like exp(-n); hence the layered representation.
LogLayered sector_count(const QuantizerSpec& spec);

// log2 of the idealized (un-rounded) sector count (pi/theta)^(n-2) *
// (2*pi/theta); the scaling analyses use this continuous form.
double sector_count_log2_ideal(int n, double theta);

// log2 log2 (ideal sector count at theta = exp(-n)) / log2 n: how fast the
// quantizer's resolution grows with blocklength relative to the blocklength
// itself.  Tends to 2 from above as n grows.
double sector_growth_ratio(int n);

struct WeightedSample {
  std::vector<double> point;
  double weight = 0.0;
};

// Collapse a weighted sample set on the shell into sector masses plus
// representatives.  Weights must be nonnegative and sum to 1 (1e-9).
// A sector holding exactly one distinct sample point keeps that point as its
// representative (so single-atom sectors quantize losslessly); otherwise the
// sector center is used.
QuantizedDistribution quantize_distribution(
    std::span<const WeightedSample> samples, const QuantizerSpec& spec);

// KL divergence D( N(x, I) || N(u, I) ) = ||x - u||^2 / 2, in nats.
double gaussian_kl(std::span<const double> x, std::span<const double> u);

// Pinsker-style bound on the variational distance, clipped at the trivial
// bound 2: min(2, sqrt(2 * kl_nats)).
double pinsker_tv_bound(double kl_nats);

struct QuantizationTvReport {
  // Monte Carlo distance between the channel outputs of the original
  // weighted samples and of their quantized representatives.
  TvEstimate empirical;
  // Mass-weighted worst-case Pinsker bound over sectors.
  double bound = 0.0;
  // Same bound with the KL inflated by n (a pessimistic variant that scales
  // the divergence with blocklength).
  double bound_scaled_kl = 0.0;
  // Closed-form sqrt(P) * n^(3/2) * exp(-n) at theta = exp(-n).
  double closed_form_at_exp_theta = 0.0;
};

QuantizationTvReport quantization_tv_report(
    std::span<const WeightedSample> samples, const QuantizerSpec& qspec,
    const ChannelSpec& cspec, std::uint64_t trials, const RngStream& rng,
    unsigned workers = 1);

// Flat text round-trip: header plus one row per sector (multi-index, mass,
// representative), 17 significant digits, deterministic row order.
void save_quantized(const QuantizedDistribution& dist, std::ostream& out);
QuantizedDistribution load_quantized(std::istream& in);

}  // namespace ridkit
