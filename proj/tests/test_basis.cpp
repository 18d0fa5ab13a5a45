#include <doctest.h>

#include <subhom/basis.hpp>
#include <subhom/config.hpp>
#include <subhom/errors.hpp>

#include <cmath>
#include <random>
#include <sstream>

using namespace subhom;

namespace {

struct Instance
{
  FineGrid grid;
  CoefficientField a;
  SparseOperator A;
  CoarsePartition partition;
  MeasurementSet ms;

  Instance(int d, int levels, const CoefficientField &coef, double H, double h)
    : grid(d, levels)
    , a(coef)
    , A(assemble_stiffness(grid, a))
    , partition(build_coarse_partition(grid, H))
    , ms(build_measurement_set(partition, h))
  {}
};

double
max_rel_diff(const Eigen::VectorXd &x, const Eigen::VectorXd &y)
{
  return (x - y).cwiseAbs().maxCoeff() / std::max(1e-300, y.cwiseAbs().maxCoeff());
}

double
quad(const SparseOperator &A, const FineGrid &g, const FineFunction &v)
{
  const Eigen::VectorXd x = g.restrict_to_interior(v);
  return x.dot(A.matrix * x);
}

} // namespace

TEST_CASE("ideal basis agrees with the dense KKT oracle")
{
  const FineGrid g(1, 6);
  for (int which = 0; which < 2; ++which) {
    const auto coef = which ? coeff_random_trig_1d(RandomSource(3), g) : coeff_constant(g, 1.0);
    for (double h : {0.25, 0.125}) {
      Instance I(1, 6, coef, 0.25, h);
      const Factorization F(I.A);
      const auto basis = ideal_basis(I.grid, I.A, F, I.ms);
      for (Index i = 0; i < basis.size(); ++i) {
        const auto ref = dense_kkt_oracle(I.grid, I.A, I.ms, i);
        CAPTURE(i);
        CHECK(max_rel_diff(basis.column(i).values, ref.values) < 1e-8);
        // oracle satisfies its own constraints
        Eigen::VectorXd e = Eigen::VectorXd::Zero(basis.size());
        e[i] = 1.0;
        CHECK((measure(ref, I.ms) - e).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
  }
}

TEST_CASE("2d ideal basis agrees with the oracle")
{
  const FineGrid g(2, 4);
  Instance I(2, 4, coeff_multiscale_2d(g), 0.25, 0.125);
  const Factorization F(I.A);
  const auto basis = ideal_basis(I.grid, I.A, F, I.ms);
  for (Index i : {Index{0}, Index{5}, Index{15}})
    CHECK(max_rel_diff(basis.column(i).values, dense_kkt_oracle(I.grid, I.A, I.ms, i).values) < 1e-8);
  CHECK_THROWS_AS(dense_kkt_oracle(I.grid, I.A, I.ms, 0, 100), InvalidArgument);
}

TEST_CASE("oracle: sum of two basis functions")
{
  Instance I(1, 4, coeff_constant(FineGrid(1, 4), 1.0), 0.5, 0.5);
  const auto p = dense_kkt_oracle(I.grid, I.A, I.ms, 0);
  const auto q = dense_kkt_oracle(I.grid, I.A, I.ms, 1);
  const Eigen::VectorXd m = measure({I.grid.key(), p.values + q.values}, I.ms);
  CHECK(m[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(m[1] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("biorthogonality")
{
  const struct
  {
    int d, levels;
    double H, h;
  } cases[] = {{1, 8, 0.125, 0.125}, {1, 8, 0.0625, 0.0078125}, {2, 6, 0.25, 0.1875}, {2, 6, 0.125, 0.03125}};
  for (const auto &c : cases) {
    const FineGrid g(c.d, c.levels);
    Instance I(c.d, c.levels, c.d == 1 ? coeff_random_trig_1d(RandomSource(1), g) : coeff_multiscale_2d(g), c.H, c.h);
    const Factorization F(I.A);
    CHECK(biorthogonality_residual(ideal_basis(I.grid, I.A, F, I.ms), I.ms) <= 1e-8);
    for (int l : {0, 1, 2})
      CHECK(biorthogonality_residual(localized_basis(I.grid, I.a, I.partition, I.ms, l), I.ms) <= 1e-8);
  }
}

TEST_CASE("minimal norm against hand-built feasible points")
{
  const FineGrid g(2, 5);
  Instance I(2, 5, coeff_multiscale_2d(g), 0.25, 0.25);
  const Factorization F(I.A);
  const auto basis = ideal_basis(I.grid, I.A, F, I.ms);

  // bilinear bump strictly inside cell i, scaled to unit cell average
  const int r = I.partition.elements_per_cell_side();
  for (Index i = 0; i < basis.size(); ++i) {
    const Multi c = I.partition.cell_coords(i);
    FineFunction w = g.zero_function();
    for (Index n = 0; n < g.node_count(); ++n) {
      const Multi x = g.node_coords(n);
      double v = 1.0;
      for (int k = 0; k < 2; ++k) {
        const double t = static_cast<double>(x[k] - c[k] * r) / r;
        v *= std::max(0.0, 1.0 - std::abs(2.0 * t - 1.0));
      }
      w.values[n] = v;
    }
    w.values /= measure(w, I.ms)[i];
    const Eigen::VectorXd m = measure(w, I.ms);
    for (Index j = 0; j < m.size(); ++j)
      REQUIRE(m[j] == doctest::Approx(i == j ? 1.0 : 0.0));
    CHECK(quad(I.A, g, w) >= quad(I.A, g, basis.column(i)));
  }

  // random feasible perturbations psi_i + (v - Psi B v)
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  const Eigen::MatrixXd Psi(basis.columns);
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd x(g.interior_count());
    for (Index k = 0; k < x.size(); ++k)
      x[k] = n01(rng);
    FineFunction v = g.extend(x);
    v.values -= Psi * measure(v, I.ms);
    const Index i = t % basis.size();
    const FineFunction w{g.key(), basis.column(i).values + 0.1 * v.values};
    CHECK(quad(I.A, g, w) >= quad(I.A, g, basis.column(i)));
  }
}

TEST_CASE("ideal residual is A-orthogonal to the basis")
{
  for (int d = 1; d <= 2; ++d) {
    const FineGrid g(d, d == 1 ? 7 : 5);
    Instance I(d, g.levels(), d == 1 ? coeff_random_trig_1d(RandomSource(2), g) : coeff_multiscale_2d(g), 0.125, 0.0625);
    const Factorization F(I.A);
    const auto basis = ideal_basis(I.grid, I.A, F, I.ms);
    const Eigen::MatrixXd Psi(basis.columns);
    std::mt19937_64 rng(d);
    std::normal_distribution<double> n01;
    for (int t = 0; t < 5; ++t) {
      Eigen::VectorXd x(g.interior_count());
      for (Index k = 0; k < x.size(); ++k)
        x[k] = n01(rng);
      FineFunction v = g.extend(x);
      v.values -= Psi * measure(v, I.ms);
      REQUIRE(measure(v, I.ms).cwiseAbs().maxCoeff() < 1e-10);
      const Eigen::VectorXd vi = g.restrict_to_interior(v);
      const double scale = std::sqrt(vi.dot(I.A.matrix * vi));
      for (Index i = 0; i < basis.size(); ++i) {
        const Eigen::VectorXd pi = g.restrict_to_interior(basis.column(i));
        const double s = scale * std::sqrt(pi.dot(I.A.matrix * pi));
        REQUIRE(std::abs(vi.dot(I.A.matrix * pi)) <= 1e-8 * s);
      }
    }
  }
}

TEST_CASE("saturated localization equals the ideal basis")
{
  for (int d = 1; d <= 2; ++d) {
    const FineGrid g(d, d == 1 ? 7 : 5);
    Instance I(d, g.levels(), d == 1 ? coeff_random_trig_1d(RandomSource(4), g) : coeff_multiscale_2d(g), 0.25, 0.125);
    const Factorization F(I.A);
    const auto ideal = ideal_basis(I.grid, I.A, F, I.ms);
    const auto loc = localized_basis(I.grid, I.a, I.partition, I.ms, 3);
    for (Index i = 0; i < ideal.size(); ++i) {
      CHECK(loc.patches[static_cast<std::size_t>(i)].is_whole_domain(I.partition));
      const FineFunction diff{g.key(), ideal.column(i).values - loc.column(i).values};
      CHECK(energy_norm(g, diff, I.A) <= 1e-8);
    }
  }
}

TEST_CASE("localized support stays in the patch")
{
  const FineGrid g(2, 5);
  Instance I(2, 5, coeff_multiscale_2d(g), 0.125, 0.0625);
  for (int l : {0, 1, 2}) {
    const auto loc = localized_basis(I.grid, I.a, I.partition, I.ms, l);
    CHECK(loc.layer == l);
    CHECK(loc.variant == BasisVariant::localized);
    for (Index i = 0; i < loc.size(); ++i) {
      const auto &P = loc.patches[static_cast<std::size_t>(i)];
      CHECK(P.members == patch(I.partition, i, l).members);
      const auto psi = loc.column(i);
      double inside = 0.0;
      for (Index n = 0; n < g.node_count(); ++n) {
        const Multi x = g.node_coords(n);
        bool in = true;
        for (int k = 0; k < 2; ++k)
          in = in && x[k] > P.node_lo[k] && x[k] < P.node_hi[k];
        if (!in)
          REQUIRE(psi.values[n] == 0.0);
        else
          inside = std::max(inside, std::abs(psi.values[n]));
      }
      CHECK(inside > 0.0);
    }
  }
  CHECK_THROWS_AS(localized_basis(I.grid, I.a, I.partition, I.ms, -1), InvalidArgument);
}

TEST_CASE("energy is nested across layers")
{
  const FineGrid g(2, 6);
  Instance I(2, 6, coeff_multiscale_2d(g), 0.125, 0.0625);
  const Factorization F(I.A);
  const auto ideal = ideal_basis(I.grid, I.A, F, I.ms);
  std::vector<BasisSet> loc;
  for (int l = 0; l <= 3; ++l)
    loc.push_back(localized_basis(I.grid, I.a, I.partition, I.ms, l));
  const double tol = 1e-10;
  for (Index i = 0; i < ideal.size(); ++i) {
    const double e_ideal = energy_norm(g, ideal.column(i), I.A);
    for (int l = 0; l < 3; ++l) {
      const double el = energy_norm(g, loc[l].column(i), I.A);
      const double el1 = energy_norm(g, loc[l + 1].column(i), I.A);
      REQUIRE(e_ideal <= el1 * (1 + tol));
      REQUIRE(el1 <= el * (1 + tol));
    }
  }
}

TEST_CASE("center basis function is symmetric for a = 1")
{
  // with an even partition, reflecting cell i maps psi_i to psi of the mirror cell
  const FineGrid g(2, 5);
  Instance I(2, 5, coeff_constant(g, 1.0), 0.25, 0.125);
  const Factorization F(I.A);
  const auto basis = ideal_basis(I.grid, I.A, F, I.ms);
  const int n = g.elements_per_side(), m = I.partition.cells_per_side();
  for (Index i = 0; i < basis.size(); ++i) {
    const Multi c = I.partition.cell_coords(i);
    const auto psi = basis.column(i);
    const auto mx = basis.column(I.partition.cell_index({m - 1 - c[0], c[1], 0}));
    const auto tr = basis.column(I.partition.cell_index({c[1], c[0], 0}));
    for (Index node = 0; node < g.node_count(); ++node) {
      const Multi x = g.node_coords(node);
      REQUIRE(psi.values[node] == doctest::Approx(mx.values[g.node_index({n - x[0], x[1], 0})]).epsilon(1e-9));
      REQUIRE(psi.values[node] == doctest::Approx(tr.values[g.node_index({x[1], x[0], 0})]).epsilon(1e-9));
    }
  }
}

TEST_CASE("basis energy does not grow as h shrinks in 2d")
{
  const FineGrid g(2, 6);
  const auto a = coeff_multiscale_2d(g);
  const auto A = assemble_stiffness(g, a);
  const Factorization F(A);
  const auto p = build_coarse_partition(g, 0.25);
  const Index c = center_cell(p);
  double prev = INFINITY;
  for (double h : {0.25, 0.125, 0.0625, 0.03125}) {
    const auto ms = build_measurement_set(p, h);
    const double e = energy_norm(g, ideal_basis(g, A, F, ms).column(c), A);
    CHECK(e <= prev);
    prev = e;
  }
}

TEST_CASE("results do not depend on the thread count")
{
  const FineGrid g(2, 5);
  Instance I(2, 5, coeff_multiscale_2d(g), 0.125, 0.0625);
  const Factorization F(I.A);
  const auto a1 = ideal_basis(I.grid, I.A, F, I.ms, 1);
  const auto a3 = ideal_basis(I.grid, I.A, F, I.ms, 3);
  CHECK(Eigen::MatrixXd(a1.columns) == Eigen::MatrixXd(a3.columns));
  const auto l1 = localized_basis(I.grid, I.a, I.partition, I.ms, 1, 1);
  const auto l3 = localized_basis(I.grid, I.a, I.partition, I.ms, 1, 3);
  CHECK(Eigen::MatrixXd(l1.columns) == Eigen::MatrixXd(l3.columns));
}

TEST_CASE("implicit recovery reproduces the basis")
{
  const FineGrid g(1, 7);
  Instance I(1, 7, coeff_random_trig_1d(RandomSource(6), g), 0.125, 0.0625);
  const Factorization F(I.A);
  const auto basis = ideal_basis(I.grid, I.A, F, I.ms);
  const IdealRecovery rec(I.grid, F, I.ms);
  CHECK((rec.gram() - basis.gram).cwiseAbs().maxCoeff() <= 1e-12 * basis.gram.cwiseAbs().maxCoeff());
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01;
  Eigen::VectorXd c(basis.size());
  for (Index k = 0; k < c.size(); ++k)
    c[k] = n01(rng);
  const Eigen::VectorXd direct = Eigen::MatrixXd(basis.columns) * c;
  CHECK(max_rel_diff(rec.recover(c).values, direct) < 1e-10);
  CHECK_THROWS_AS(rec.recover(Eigen::VectorXd::Zero(3)), InvalidArgument);
}

TEST_CASE("basis csv")
{
  const FineGrid g(1, 4);
  Instance I(1, 4, coeff_constant(g, 1.0), 0.5, 0.25);
  const Factorization F(I.A);
  std::ostringstream os;
  write_basis_csv(os, ideal_basis(I.grid, I.A, F, I.ms));
  CHECK(os.str().rfind("cell,node,value\n", 0) == 0);
}
