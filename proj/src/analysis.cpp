#include <subhom/analysis.hpp>
#include <subhom/errors.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace subhom {

const char *
to_string(SolutionVariant v) noexcept
{
  return v == SolutionVariant::recovery ? "recovery" : "galerkin";
}

FineFunction
recover(const BasisSet &basis, const Eigen::VectorXd &data)
{
  if (data.size() != basis.size())
    throw InvalidArgument("data has " + std::to_string(data.size()) + " entries, basis has " +
                          std::to_string(basis.size()) + " functions");
  return {basis.grid, basis.columns * data};
}

FineFunction
galerkin_solve(const FineGrid &grid, const BasisSet &basis, const SparseOperator &A, const Eigen::VectorXd &load)
{
  if (!(basis.grid == grid.key()) || !(A.grid == grid.key()))
    throw GridMismatch("basis and operator must live on the grid");
  if (load.size() != grid.interior_count())
    throw GridMismatch("load vector has wrong length");

  // Rows of Psi restricted to interior nodes.
  std::vector<Eigen::Triplet<double>> sel;
  sel.reserve(static_cast<std::size_t>(grid.interior_count()));
  for (Index k = 0; k < grid.interior_count(); ++k)
    sel.emplace_back(static_cast<int>(k), static_cast<int>(grid.interior_node(k)), 1.0);
  Eigen::SparseMatrix<double> P(grid.interior_count(), grid.node_count());
  P.setFromTriplets(sel.begin(), sel.end());
  const Eigen::SparseMatrix<double> Psi = P * basis.columns;

  const Eigen::SparseMatrix<double> APsi = A.matrix * Psi;
  Eigen::SparseMatrix<double> K = Psi.transpose() * APsi;
  K = 0.5 * (K + Eigen::SparseMatrix<double>(K.transpose()));
  const Eigen::VectorXd F = Psi.transpose() * load;

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K);
  bool ok = ldlt.info() == Eigen::Success;
  if (ok)
    ok = (ldlt.vectorD().array() > 0.0).all();
  if (!ok) {
    std::ostringstream os;
    os << "coarse Galerkin matrix is singular";
    if (K.rows() <= 4096) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(K), Eigen::EigenvaluesOnly);
      os << ": eigenvalues in [" << es.eigenvalues().minCoeff() << ", "
         << es.eigenvalues().maxCoeff() << "]";
    }
    throw SolverError(os.str());
  }
  const Eigen::VectorXd c = ldlt.solve(F);
  return {grid.key(), basis.columns * c};
}

ErrorReport
error_report(const FineGrid &grid,
             const FineFunction &reference,
             const FineFunction &candidate,
             const SparseOperator &A,
             const SparseOperator &M,
             SolutionVariant variant)
{
  grid.check(reference);
  grid.check(candidate);
  const FineFunction diff{grid.key(), reference.values - candidate.values};
  const Norms n = norms(grid, diff, A, M);
  ErrorReport r;
  r.variant = variant;
  r.energy = n.energy;
  r.l2 = n.l2;
  r.dim = grid.dim();
  if (A.coefficient)
    r.coefficient_id = A.coefficient->id();
  return r;
}

double
rho(int p, int d, double t)
{
  if (p < 1 || d < 1 || !(t > 0.0))
    throw InvalidArgument("rho requires p, d >= 1 and t > 0");
  if (d < p)
    return 1.0;
  if (d == p)
    return std::pow(std::log1p(t), static_cast<double>(d - 1) / d);
  return std::pow(t, static_cast<double>(d - p) / p);
}

double
beta_bound(double h, double H, int dim, const TheoryConstants &tc)
{
  if (!(h > 0.0) || h > H)
    throw InvalidArgument("beta_bound requires 0 < h <= H");
  if (!(tc.C0 > 0.0 && tc.C1 > 0.0 && tc.C2 > 0.0 && tc.a_min > 0.0 && tc.a_max >= tc.a_min))
    throw InvalidArgument("theory constants must be positive with a_max >= a_min");
  const double x = tc.C0 * std::sqrt(tc.a_max / tc.a_min) *
                   (tc.C1 * rho(2, dim, H / h) + tc.C1 * tc.C2 * h / H);
  return x / (x + 1.0);
}

double
DecayProfile::fitted_ratio(int k_max, double floor) const
{
  std::vector<double> ks, logs;
  const int last = k_max < 0 ? static_cast<int>(tail.size()) - 1
                             : std::min(k_max, static_cast<int>(tail.size()) - 1);
  for (int k = 0; k <= last; ++k)
    if (tail[static_cast<std::size_t>(k)] > floor) {
      ks.push_back(k);
      logs.push_back(std::log(tail[static_cast<std::size_t>(k)]));
    }
  if (ks.size() < 2)
    return 0.0;
  return std::exp(least_squares_slope(ks, logs));
}

DecayProfile
decay_profile(const FineGrid &grid, const BasisSet &basis, Index cell, const CoarsePartition &partition, const SparseOperator &A)
{
  if (!A.coefficient)
    throw InvalidArgument("decay_profile needs a stiffness operator with its coefficient");
  if (!(basis.grid == grid.key()) || !(partition.grid() == grid))
    throw GridMismatch("basis and partition must live on the grid");
  if (cell < 0 || cell >= basis.size())
    throw InvalidArgument("cell index out of range");

  const FineFunction psi = basis.column(cell);
  const Eigen::MatrixXd Kref = reference_stiffness(grid.dim(), grid.spacing());
  const int nc = grid.corners_per_element();
  const Multi center = partition.cell_coords(cell);

  // Element energies bucketed by the Chebyshev distance of their cell to
  // the center cell; an element lies outside N^k iff that distance > k.
  int saturation = 0;
  for (int k = 0; k < grid.dim(); ++k)
    saturation = std::max({saturation, center[k], partition.cells_per_side() - 1 - center[k]});
  std::vector<double> bucket(static_cast<std::size_t>(saturation) + 1, 0.0);
  Eigen::VectorXd pe(nc);
  grid.for_each_element([&](const Multi &e, Index ei) {
    for (int c = 0; c < nc; ++c)
      pe[c] = psi.values[grid.element_corner(e, c)];
    const double energy = std::max(0.0, (*A.coefficient)[ei] * pe.dot(Kref * pe));
    const Multi cc = partition.cell_coords(partition.cell_of_element(e));
    int dist = 0;
    for (int k = 0; k < grid.dim(); ++k)
      dist = std::max(dist, std::abs(cc[k] - center[k]));
    bucket[static_cast<std::size_t>(dist)] += energy;
  });

  DecayProfile prof;
  prof.cell = cell;
  prof.tail.assign(static_cast<std::size_t>(saturation) + 1, 0.0);
  double s = 0.0;
  for (int k = saturation; k >= 0; --k) {
    prof.tail[static_cast<std::size_t>(k)] = s;
    s += bucket[static_cast<std::size_t>(k)];
  }
  prof.total = s;
  return prof;
}

double
localization_distance(const FineGrid &grid, const FineFunction &ideal_i, const FineFunction &localized_i, const SparseOperator &A)
{
  grid.check(ideal_i);
  grid.check(localized_i);
  return energy_norm(grid, {grid.key(), ideal_i.values - localized_i.values}, A);
}

double
least_squares_slope(std::span<const double> x, std::span<const double> y)
{
  if (x.size() != y.size() || x.size() < 2)
    throw InvalidArgument("least_squares_slope needs at least two paired samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  return sxy / sxx;
}

double
median(std::vector<double> values)
{
  if (values.empty())
    throw InvalidArgument("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

} // namespace subhom
