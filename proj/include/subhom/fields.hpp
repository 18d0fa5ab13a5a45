#pragma once

#include <subhom/grid.hpp>

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace subhom {

/// Piecewise constant coefficient, one value per fine element (sampled at
/// the element center).
class CoefficientField
{
public:
  CoefficientField(GridKey grid, std::vector<double> values, std::string id);

  const GridKey &grid() const noexcept { return grid_; }
  const std::vector<double> &values() const noexcept { return values_; }
  double operator[](Index element) const noexcept { return values_[static_cast<std::size_t>(element)]; }
  double a_min() const noexcept { return a_min_; }
  double a_max() const noexcept { return a_max_; }
  const std::string &id() const noexcept { return id_; }

private:
  GridKey grid_;
  std::vector<double> values_;
  double a_min_;
  double a_max_;
  std::string id_;
};

/// Seeded stream of random draws. The same (seed, stream) pair always
/// produces the same sequence on a given build.
class RandomSource
{
public:
  explicit RandomSource(std::uint64_t seed, std::uint64_t stream = 0) noexcept
    : seed_(seed)
    , stream_(stream)
  {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Independent child stream.
  RandomSource substream(std::uint64_t index) const noexcept;
  std::mt19937_64 engine() const noexcept;

private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

CoefficientField coeff_constant(const FineGrid &grid, double value);

/// a = 1 + 0.5 sin(sum_k eta_k cos(kx) + zeta_k sin(kx)), k = 1..100, with
/// eta, zeta ~ U[-0.5, 0.5].
CoefficientField coeff_random_trig_1d(const RandomSource &src, const FineGrid &grid);
/// Same field with explicit eta/zeta (equal lengths).
CoefficientField coeff_random_trig_1d(std::span<const double> eta,
                                      std::span<const double> zeta,
                                      const FineGrid &grid);

/// Deterministic five-scale 2D coefficient.
CoefficientField coeff_multiscale_2d(const FineGrid &grid);
double multiscale_2d_value(double x1, double x2) noexcept;

/// Truncated sine series of N(0, (-Laplace)^{-1/2-delta}) on [0,1], modes
/// 1..2^levels-1. In 2D the product f1(x1) f2(x2) of two independent draws.
FineFunction sample_rhs_fractional(const RandomSource &src, const FineGrid &grid, double delta);

/// (H / max(h_g, dist)) log^2(1 + H / max(h_g, dist)), dist to the nearest
/// cell center.
CoefficientField weight_log_singular(const CoarsePartition &partition);
/// (H / max(h_g, dist))^{d-2+gamma}; requires d >= 2 and gamma > 0.
CoefficientField weight_power(const CoarsePartition &partition, double gamma);

double weight_log_value(double H, double hg, double dist) noexcept;
double weight_power_value(int dim, double H, double hg, double dist, double gamma) noexcept;

/// CSV with columns element,x[,y[,z]],value.
void write_field_csv(std::ostream &os, const CoefficientField &field, const FineGrid &grid);

} // namespace subhom
