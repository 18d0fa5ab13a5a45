#include <doctest.h>

#include <subhom/errors.hpp>
#include <subhom/grid.hpp>

#include <algorithm>
#include <cmath>
#include <random>

using namespace subhom;

namespace {

FineFunction
sample(const FineGrid &g, double (*fn)(double, double))
{
  FineFunction v = g.zero_function();
  for (Index n = 0; n < g.node_count(); ++n) {
    const auto p = g.node_point(n);
    v.values[n] = fn(p[0], p[1]);
  }
  return v;
}

} // namespace

TEST_CASE("grid counts")
{
  const FineGrid a(1, 3);
  CHECK(a.node_count() == 9);
  CHECK(a.interior_count() == 7);
  const FineGrid b(2, 2);
  CHECK(b.node_count() == 25);
  CHECK(b.interior_count() == 9);
  const FineGrid c(2, 8);
  CHECK(c.spacing() == std::ldexp(1.0, -8));
  CHECK(c.element_count() == 256 * 256);
}

TEST_CASE("grid rejects bad shapes")
{
  CHECK_THROWS_AS(FineGrid(0, 3), InvalidArgument);
  CHECK_THROWS_AS(FineGrid(4, 3), InvalidArgument);
  CHECK_THROWS_AS(FineGrid(1, 0), InvalidArgument);
  CHECK_THROWS(FineGrid(3, 9));
}

TEST_CASE("node numbering round trips, first coordinate fastest")
{
  const FineGrid g(2, 3);
  CHECK(g.node_index({1, 0, 0}) == 1);
  CHECK(g.node_index({0, 1, 0}) == g.nodes_per_side());
  for (Index n = 0; n < g.node_count(); ++n) {
    CHECK(g.node_index(g.node_coords(n)) == n);
    const Index k = g.interior_index(n);
    CHECK((k < 0) == g.is_boundary_node(n));
    if (k >= 0)
      CHECK(g.interior_node(k) == n);
  }
}

TEST_CASE("extend and restrict")
{
  const FineGrid g(2, 3);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(g.interior_count(), 1.0, 2.0);
  const FineFunction v = g.extend(x);
  CHECK(v.values.size() == g.node_count());
  for (Index n = 0; n < g.node_count(); ++n)
    if (g.is_boundary_node(n))
      CHECK(v.values[n] == 0.0);
  CHECK(g.restrict_to_interior(v) == x);
  CHECK_THROWS_AS(g.check(FineGrid(2, 4).zero_function()), GridMismatch);
}

TEST_CASE("coarse partition sizes")
{
  CHECK(build_coarse_partition(FineGrid(2, 5), 0.25).cell_count() == 16);
  const auto p = build_coarse_partition(FineGrid(1, 4), 0.5);
  REQUIRE(p.cell_count() == 2);
  CHECK(p.cell_center(0)[0] == 0.25);
  CHECK(p.cell_center(1)[0] == 0.75);
  CHECK(build_coarse_partition(FineGrid(2, 8), std::ldexp(1.0, -6)).cell_count() == 4096);
}

TEST_CASE("coarse partition alignment")
{
  const FineGrid g(2, 4);
  CHECK_THROWS_AS(build_coarse_partition(g, 0.3), AlignmentError);
  CHECK_THROWS_AS(build_coarse_partition(g, std::ldexp(1.0, -5)), AlignmentError);
  CHECK_NOTHROW(build_coarse_partition(g, std::ldexp(1.0, -4)));
}

TEST_CASE("measurement alignment")
{
  const FineGrid g(1, 5);
  const auto p = build_coarse_partition(g, 0.25);
  const auto ms = build_measurement_set(p, 0.125);
  CHECK(ms.subcube_elements() == 4);
  CHECK(ms.offset_elements() == 2);  // 1/16 on a 1/32 grid

  try {
    build_measurement_set(p, 0.1);
    FAIL("h = 1/10 accepted");
  } catch (const AlignmentError &e) {
    CHECK(std::string(e.what()).find("h") != std::string::npos);
  }
  CHECK_THROWS_AS(build_measurement_set(p, 0.5), InvalidArgument);
  CHECK_THROWS_AS(build_measurement_set(p, 0.0), InvalidArgument);

  // h = 3H/4 is fine once the offset H/8 is resolved
  CHECK_NOTHROW(build_measurement_set(p, 0.1875));
  CHECK_THROWS_AS(build_measurement_set(build_coarse_partition(FineGrid(1, 4), 0.25), 0.1875),
                  AlignmentError);
}

TEST_CASE("measure examples")
{
  const FineGrid g(1, 4);
  const auto half = build_coarse_partition(g, 0.5);
  const auto ms = build_measurement_set(half, 0.25);
  const Eigen::VectorXd mx = measure(sample(g, [](double x, double) { return x; }), ms);
  CHECK(mx[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(mx[1] == doctest::Approx(0.75).epsilon(1e-15));

  // average of x^2 over [1/4, 3/4]; Q1 interpolation of x^2 adds h_g^2/6 per element
  const FineGrid fine(1, 8);
  const auto whole = build_coarse_partition(fine, 1.0);
  const auto c = build_measurement_set(whole, 0.5);
  const double hg = fine.spacing();
  const Eigen::VectorXd mq = measure(sample(fine, [](double x, double) { return x * x; }), c);
  CHECK(mq[0] == doctest::Approx(0.25 + 0.25 / 12.0 + hg * hg / 6.0).epsilon(1e-13));
  CHECK(std::abs(mq[0] - 0.2708333333333333) < 1e-5);
}

TEST_CASE("measure of one is one")
{
  const struct
  {
    int d, levels;
    double H, h;
  } cases[] = {{1, 6, 0.25, 0.25}, {1, 6, 0.125, 0.03125}, {2, 5, 0.25, 0.1875}, {2, 7, 0.125, 0.015625},
               {3, 4, 0.5, 0.25}};
  for (const auto &c : cases) {
    const FineGrid g(c.d, c.levels);
    const auto ms = build_measurement_set(build_coarse_partition(g, c.H), c.h);
    FineFunction one = g.zero_function();
    one.values.setOnes();
    const Eigen::VectorXd m = measure(one, ms);
    CHECK((m.array() - 1.0).abs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("measure is linear")
{
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + trial % 2;
    const FineGrid g(d, d == 1 ? 7 : 6);
    const double H = std::ldexp(1.0, -(1 + trial % 3));
    const double h = H * std::ldexp(1.0, -(trial % 3));
    const auto ms = build_measurement_set(build_coarse_partition(g, H), h);
    FineFunction u = g.zero_function(), v = g.zero_function();
    for (Index k = 0; k < g.node_count(); ++k) {
      u.values[k] = n01(rng);
      v.values[k] = n01(rng);
    }
    const double al = n01(rng), be = n01(rng);
    const FineFunction w{g.key(), al * u.values + be * v.values};
    const Eigen::VectorXd lhs = measure(w, ms);
    const Eigen::VectorXd rhs = al * measure(u, ms) + be * measure(v, ms);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("h = H gives cell averages")
{
  const FineGrid g(2, 5);
  const auto p = build_coarse_partition(g, 0.25);
  const auto ms = build_measurement_set(p, 0.25);
  // bilinear xy is reproduced exactly by Q1, so cell averages are products of midpoints
  const Eigen::VectorXd m = measure(sample(g, [](double x, double y) { return x * y; }), ms);
  for (Index i = 0; i < p.cell_count(); ++i) {
    const auto c = p.cell_center(i);
    CHECK(m[i] == doctest::Approx(c[0] * c[1]).epsilon(1e-13));
  }
}

TEST_CASE("constraint matrix matches measure")
{
  const FineGrid g(2, 5);
  const auto ms = build_measurement_set(build_coarse_partition(g, 0.25), 0.125);
  const auto B = ms.constraint_matrix(false);
  CHECK(B.rows() == 16);
  CHECK(B.cols() == g.node_count());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  FineFunction v = g.zero_function();
  for (Index k = 0; k < g.node_count(); ++k)
    v.values[k] = u(rng);
  CHECK(((B * v.values) - measure(v, ms)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(ms.constraint_matrix(true).cols() == g.interior_count());
}

TEST_CASE("patch examples")
{
  const FineGrid g(2, 4);
  const auto p = build_coarse_partition(g, 0.25);
  const Index inner = p.cell_index({1, 1, 0});
  CHECK(patch(p, inner, 1).members.size() == 9);
  CHECK(patch(p, inner, 0).members == std::vector<Index>{inner});
  CHECK(patch(p, 0, 1).members.size() == 4);
  CHECK(patch(p, 0, 3).is_whole_domain(p));
  CHECK_FALSE(patch(p, 0, 2).is_whole_domain(p));
}

TEST_CASE("patch growth is monotone and saturates")
{
  for (int d = 1; d <= 3; ++d) {
    const FineGrid g(d, d == 3 ? 3 : 4);
    const auto p = build_coarse_partition(g, 0.25);
    for (Index i = 0; i < p.cell_count(); ++i) {
      std::vector<Index> prev;
      for (int l = 0; l <= 4; ++l) {
        const auto P = patch(p, i, l);
        CHECK(std::includes(P.members.begin(), P.members.end(), prev.begin(), prev.end()));
        CHECK(P.contains(i));
        prev = P.members;
      }
      CHECK(static_cast<Index>(prev.size()) == p.cell_count());
    }
  }
}

TEST_CASE("patch membership commutes with reflection")
{
  const FineGrid g(2, 5);
  const auto p = build_coarse_partition(g, 0.125);
  const int m = p.cells_per_side();
  auto flip = [&](Index c, int axis) {
    Multi x = p.cell_coords(c);
    x[axis] = m - 1 - x[axis];
    return p.cell_index(x);
  };
  auto transpose = [&](Index c) {
    Multi x = p.cell_coords(c);
    std::swap(x[0], x[1]);
    return p.cell_index(x);
  };
  for (Index i = 0; i < p.cell_count(); ++i)
    for (int l = 0; l <= 3; ++l) {
      const auto base = patch(p, i, l);
      for (int axis = 0; axis < 2; ++axis) {
        std::vector<Index> mapped;
        for (Index c : base.members)
          mapped.push_back(flip(c, axis));
        std::sort(mapped.begin(), mapped.end());
        CHECK(mapped == patch(p, flip(i, axis), l).members);
      }
      std::vector<Index> mapped;
      for (Index c : base.members)
        mapped.push_back(transpose(c));
      std::sort(mapped.begin(), mapped.end());
      CHECK(mapped == patch(p, transpose(i), l).members);
    }
}

TEST_CASE("adjacency is closed-cube contact")
{
  const FineGrid g(2, 3);
  const auto p = build_coarse_partition(g, 0.25);
  const Index c = p.cell_index({1, 1, 0});
  CHECK(p.adjacent(c, p.cell_index({2, 2, 0})));
  CHECK(p.adjacent(c, p.cell_index({0, 1, 0})));
  CHECK_FALSE(p.adjacent(c, p.cell_index({3, 1, 0})));
}
