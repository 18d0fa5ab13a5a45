#include <subhom/errors.hpp>
#include <subhom/fields.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace subhom {

namespace {

std::uint64_t
splitmix64(std::uint64_t x) noexcept
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<double>
sample_elements(const FineGrid &grid, auto &&fn)
{
  std::vector<double> v(static_cast<std::size_t>(grid.element_count()));
  for (Index e = 0; e < grid.element_count(); ++e)
    v[static_cast<std::size_t>(e)] = fn(grid.element_center(e));
  return v;
}

// Nodal values of sum_k c_k sqrt(2) sin(k pi x) on a 1D grid of n elements.
std::vector<double>
sine_series_1d(const RandomSource &src, int n, double delta)
{
  auto eng = src.engine();
  std::normal_distribution<double> normal(0.0, 1.0);
  const int K = n - 1;
  std::vector<double> coef(static_cast<std::size_t>(K) + 1, 0.0);
  for (int k = 1; k <= K; ++k)
    coef[k] = std::pow(k * std::numbers::pi, -(0.5 + delta)) * normal(eng);

  // sin(pi m / n) for m in [0, 2n); index arithmetic keeps sin(k pi x_j)
  // exact at the boundary.
  std::vector<double> table(2 * static_cast<std::size_t>(n));
  for (int m = 0; m < 2 * n; ++m)
    table[m] = (m == 0 || m == n) ? 0.0 : std::sin(std::numbers::pi * m / n);

  std::vector<double> f(static_cast<std::size_t>(n) + 1, 0.0);
  for (int j = 1; j < n; ++j) {
    double s = 0.0;
    for (int k = 1; k <= K; ++k)
      s += coef[k] * table[(static_cast<long>(k) * j) % (2 * n)];
    f[j] = std::numbers::sqrt2 * s;
  }
  return f;
}

} // namespace

CoefficientField::CoefficientField(GridKey grid, std::vector<double> values, std::string id)
  : grid_(grid)
  , values_(std::move(values))
  , a_min_(values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end()))
  , a_max_(values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end()))
  , id_(std::move(id))
{}

RandomSource
RandomSource::substream(std::uint64_t index) const noexcept
{
  return RandomSource(seed_, splitmix64(stream_ ^ splitmix64(index + 0x51ed270b27a1f3c5ULL)));
}

std::mt19937_64
RandomSource::engine() const noexcept
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  return std::mt19937_64(seq);
}

CoefficientField
coeff_constant(const FineGrid &grid, double value)
{
  return CoefficientField(grid.key(),
                          std::vector<double>(static_cast<std::size_t>(grid.element_count()), value),
                          "constant");
}

CoefficientField
coeff_random_trig_1d(const RandomSource &src, const FineGrid &grid)
{
  if (grid.dim() != 1)
    throw InvalidArgument("coeff_random_trig_1d requires d = 1");
  auto eng = src.engine();
  std::uniform_real_distribution<double> uni(-0.5, 0.5);
  std::vector<double> eta(100), zeta(100);
  for (int k = 0; k < 100; ++k) {
    eta[k] = uni(eng);
    zeta[k] = uni(eng);
  }
  auto field = coeff_random_trig_1d(eta, zeta, grid);
  return CoefficientField(field.grid(), field.values(),
                          "trig1d:" + std::to_string(src.seed()));
}

CoefficientField
coeff_random_trig_1d(std::span<const double> eta, std::span<const double> zeta, const FineGrid &grid)
{
  if (grid.dim() != 1)
    throw InvalidArgument("coeff_random_trig_1d requires d = 1");
  if (eta.size() != zeta.size())
    throw InvalidArgument("eta and zeta must have equal length");
  auto v = sample_elements(grid, [&](const std::array<double, 3> &x) {
    double s = 0.0;
    for (std::size_t k = 0; k < eta.size(); ++k) {
      const double kx = static_cast<double>(k + 1) * x[0];
      s += eta[k] * std::cos(kx) + zeta[k] * std::sin(kx);
    }
    return 1.0 + 0.5 * std::sin(s);
  });
  return CoefficientField(grid.key(), std::move(v), "trig1d");
}

double
multiscale_2d_value(double x1, double x2) noexcept
{
  constexpr double pi2 = 2.0 * std::numbers::pi;
  const double e1 = 1.0 / 5, e2 = 1.0 / 13, e3 = 1.0 / 17, e4 = 1.0 / 31, e5 = 1.0 / 65;
  const double s = (1.1 + std::sin(pi2 * x1 / e1)) / (1.1 + std::sin(pi2 * x2 / e1)) +
                   (1.1 + std::sin(pi2 * x2 / e2)) / (1.1 + std::cos(pi2 * x1 / e2)) +
                   (1.1 + std::cos(pi2 * x1 / e3)) / (1.1 + std::sin(pi2 * x2 / e3)) +
                   (1.1 + std::sin(pi2 * x2 / e4)) / (1.1 + std::cos(pi2 * x1 / e4)) +
                   (1.1 + std::cos(pi2 * x1 / e5)) / (1.1 + std::sin(pi2 * x2 / e5)) +
                   std::sin(4.0 * x1 * x1 * x2 * x2) + 1.0;
  return s / 6.0;
}

CoefficientField
coeff_multiscale_2d(const FineGrid &grid)
{
  if (grid.dim() != 2)
    throw InvalidArgument("coeff_multiscale_2d requires d = 2");
  auto v = sample_elements(grid, [](const std::array<double, 3> &x) {
    return multiscale_2d_value(x[0], x[1]);
  });
  return CoefficientField(grid.key(), std::move(v), "multiscale2d");
}

FineFunction
sample_rhs_fractional(const RandomSource &src, const FineGrid &grid, double delta)
{
  if (!(delta > 0.0))
    throw InvalidArgument("delta must be positive");
  const int n = grid.elements_per_side();
  FineFunction f = grid.zero_function();
  if (grid.dim() == 1) {
    const auto f1 = sine_series_1d(src, n, delta);
    for (int j = 0; j <= n; ++j)
      f.values[j] = f1[j];
    return f;
  }
  std::vector<std::vector<double>> factors;
  for (int k = 0; k < grid.dim(); ++k)
    factors.push_back(sine_series_1d(src.substream(static_cast<std::uint64_t>(k)), n, delta));
  for (Index node = 0; node < grid.node_count(); ++node) {
    const Multi c = grid.node_coords(node);
    double v = 1.0;
    for (int k = 0; k < grid.dim(); ++k)
      v *= factors[k][c[k]];
    f.values[node] = v;
  }
  return f;
}

double
weight_log_value(double H, double hg, double dist) noexcept
{
  const double t = H / std::max(hg, dist);
  const double lg = std::log1p(t);
  return t * lg * lg;
}

double
weight_power_value(int dim, double H, double hg, double dist, double gamma) noexcept
{
  return std::pow(H / std::max(hg, dist), dim - 2 + gamma);
}

CoefficientField
weight_log_singular(const CoarsePartition &partition)
{
  const FineGrid &g = partition.grid();
  auto v = sample_elements(g, [&](const std::array<double, 3> &x) {
    return weight_log_value(partition.H(), g.spacing(), partition.distance_to_centers(x));
  });
  return CoefficientField(g.key(), std::move(v), "weight_log");
}

CoefficientField
weight_power(const CoarsePartition &partition, double gamma)
{
  const FineGrid &g = partition.grid();
  if (g.dim() < 2)
    throw InvalidArgument("weight_power requires d >= 2");
  if (!(gamma > 0.0))
    throw InvalidArgument("weight_power requires gamma > 0");
  auto v = sample_elements(g, [&](const std::array<double, 3> &x) {
    return weight_power_value(g.dim(), partition.H(), g.spacing(),
                              partition.distance_to_centers(x), gamma);
  });
  return CoefficientField(g.key(), std::move(v), "weight_power");
}

void
write_field_csv(std::ostream &os, const CoefficientField &field, const FineGrid &grid)
{
  if (!(field.grid() == grid.key()))
    throw GridMismatch("field does not live on the given grid");
  static const char *axis[] = {"x", "y", "z"};
  os << "element";
  for (int k = 0; k < grid.dim(); ++k)
    os << ',' << axis[k];
  os << ",value\n";
  const auto prec = os.precision(17);
  for (Index e = 0; e < grid.element_count(); ++e) {
    const auto x = grid.element_center(e);
    os << e;
    for (int k = 0; k < grid.dim(); ++k)
      os << ',' << x[k];
    os << ',' << field[e] << '\n';
  }
  os.precision(prec);
}

} // namespace subhom
