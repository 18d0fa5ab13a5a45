#include <subhom/basis.hpp>
#include <subhom/errors.hpp>
#include <subhom/parallel.hpp>

#include <Eigen/Eigenvalues>
#include <lapacke.h>

#include <cmath>
#include <ostream>
#include <sstream>

namespace subhom {

namespace {

// Factor a symmetric Gram matrix, reporting its condition number on failure.
Eigen::LLT<Eigen::MatrixXd>
factor_gram(const Eigen::MatrixXd &S, const char *what)
{
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    const auto &ev = es.eigenvalues();
    std::ostringstream os;
    os << what << " is not positive definite: eigenvalues in [" << ev.minCoeff() << ", "
       << ev.maxCoeff() << "], condition " << ev.maxCoeff() / std::abs(ev.minCoeff());
    throw SolverError(os.str());
  }
  return llt;
}

// Y = A^{-1} B^T, column by column.
Eigen::MatrixXd
constraint_solves(const Factorization &F,
                  const Eigen::SparseMatrix<double, Eigen::RowMajor> &B,
                  int threads)
{
  Eigen::MatrixXd Y(F.size(), B.rows());
  parallel_for(B.rows(), threads, [&](Index j) {
    const Eigen::VectorXd bj = B.row(j).transpose();
    Y.col(j) = F.solve(bj);
  });
  return Y;
}

Eigen::MatrixXd
symmetric_part(const Eigen::MatrixXd &S)
{
  return 0.5 * (S + S.transpose());
}

PatchIndexSet
whole_domain(const CoarsePartition &p, Index cell)
{
  return patch(p, cell, p.cells_per_side());
}

} // namespace

FineFunction
BasisSet::column(Index i) const
{
  FineFunction f{grid, Eigen::VectorXd::Zero(columns.rows())};
  for (Eigen::SparseMatrix<double>::InnerIterator it(columns, static_cast<int>(i)); it; ++it)
    f.values[it.row()] = it.value();
  return f;
}

BasisSet
ideal_basis(const FineGrid &grid,
            const SparseOperator &A,
            const Factorization &F,
            const MeasurementSet &ms,
            int threads)
{
  if (!(A.grid == grid.key()) || !(ms.grid() == grid) || F.size() != grid.interior_count())
    throw GridMismatch("operator, factorization and measurement set must share the grid");

  const auto B = ms.constraint_matrix(true);
  const Eigen::MatrixXd Y = constraint_solves(F, B, threads);
  const Eigen::MatrixXd S = symmetric_part(B * Y);
  const auto llt = factor_gram(S, "constraint Gram matrix");
  // Psi = Y S^{-1}; S is symmetric so Psi^T = S^{-1} Y^T.
  const Eigen::MatrixXd Psi = llt.solve(Y.transpose()).transpose();

  BasisSet out;
  out.variant = BasisVariant::ideal;
  out.layer = -1;
  out.grid = grid.key();
  out.H = ms.H();
  out.h = ms.h();
  out.coefficient_id = A.coefficient ? A.coefficient->id() : std::string{};
  out.gram = S;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(Psi.size()));
  for (Index i = 0; i < Psi.cols(); ++i)
    for (Index k = 0; k < Psi.rows(); ++k)
      if (Psi(k, i) != 0.0)
        trip.emplace_back(static_cast<int>(grid.interior_node(k)), static_cast<int>(i), Psi(k, i));
  out.columns.resize(grid.node_count(), ms.size());
  out.columns.setFromTriplets(trip.begin(), trip.end());
  for (Index i = 0; i < ms.size(); ++i)
    out.patches.push_back(whole_domain(ms.partition(), i));
  return out;
}

BasisSet
localized_basis(const FineGrid &grid,
                const CoefficientField &a,
                const CoarsePartition &partition,
                const MeasurementSet &ms,
                int layer,
                int threads,
                SolverOptions options)
{
  if (layer < 0)
    throw InvalidArgument("layer must be nonnegative");
  if (!(partition.grid() == grid) || !(ms.grid() == grid) || !(a.grid() == grid.key()))
    throw GridMismatch("coefficient, partition and measurement set must share the grid");

  const int d = grid.dim();
  const Index n = ms.size();
  const double w = 1.0 / (std::pow(static_cast<double>(ms.subcube_elements()), d) * (1 << d));

  std::vector<PatchIndexSet> patches(static_cast<std::size_t>(n));
  std::vector<std::vector<Eigen::Triplet<double>>> cols(static_cast<std::size_t>(n));

  parallel_for(n, threads, [&](Index i) {
    PatchIndexSet P = patch(partition, i, layer);
    const BoxSpace box(grid, P.node_lo, P.node_hi);
    const Factorization Floc(box.stiffness(a), options);

    // Local constraint rows, one per cell in the patch.
    const Index m = static_cast<Index>(P.members.size());
    Eigen::SparseMatrix<double, Eigen::RowMajor> B(m, box.size());
    std::vector<Eigen::Triplet<double>> trip;
    Index self = -1;
    for (Index r = 0; r < m; ++r) {
      const Index j = P.members[static_cast<std::size_t>(r)];
      if (j == i)
        self = r;
      Multi lo, hi;
      ms.subcube_box(j, lo, hi);
      grid.for_each_element_in_box(lo, hi, [&](const Multi &e, Index) {
        for (int c = 0; c < grid.corners_per_element(); ++c) {
          Multi node = e;
          for (int k = 0; k < d; ++k)
            node[k] += (c >> k) & 1;
          const Index li = box.local_index(node);
          if (li >= 0)
            trip.emplace_back(static_cast<int>(r), static_cast<int>(li), w);
        }
      });
    }
    B.setFromTriplets(trip.begin(), trip.end());

    const Eigen::MatrixXd Y = constraint_solves(Floc, B, 1);
    const Eigen::MatrixXd S = symmetric_part(B * Y);
    const auto llt = factor_gram(S, "local constraint Gram matrix");
    const Eigen::VectorXd lambda = llt.solve(Eigen::VectorXd::Unit(m, self));
    const Eigen::VectorXd psi = Y * lambda;

    auto &out = cols[static_cast<std::size_t>(i)];
    out.reserve(static_cast<std::size_t>(psi.size()));
    for (Index k = 0; k < psi.size(); ++k)
      if (psi[k] != 0.0)
        out.emplace_back(static_cast<int>(box.global_node(k)), static_cast<int>(i), psi[k]);
    patches[static_cast<std::size_t>(i)] = std::move(P);
  });

  BasisSet basis;
  basis.variant = BasisVariant::localized;
  basis.layer = layer;
  basis.grid = grid.key();
  basis.H = ms.H();
  basis.h = ms.h();
  basis.coefficient_id = a.id();
  std::vector<Eigen::Triplet<double>> all;
  for (const auto &c : cols)
    all.insert(all.end(), c.begin(), c.end());
  basis.columns.resize(grid.node_count(), n);
  basis.columns.setFromTriplets(all.begin(), all.end());
  basis.patches = std::move(patches);
  return basis;
}

FineFunction
dense_kkt_oracle(const FineGrid &grid, const SparseOperator &A, const MeasurementSet &ms, Index i, Index budget)
{
  const Index n = grid.interior_count();
  if (n > budget)
    throw InvalidArgument("dense KKT oracle: " + std::to_string(n) +
                          " interior nodes exceed the dense budget " + std::to_string(budget));
  if (i < 0 || i >= ms.size())
    throw InvalidArgument("cell index out of range");
  if (!(A.grid == grid.key()))
    throw GridMismatch("operator does not live on the grid");

  const Index m = ms.size();
  const Index N = n + m;
  // Column-major [[A, B^T], [B, 0]]; only the lower triangle is referenced.
  std::vector<double> K(static_cast<std::size_t>(N * N), 0.0);
  auto at = [&](Index r, Index c) -> double & { return K[static_cast<std::size_t>(c * N + r)]; };
  for (int k = 0; k < A.matrix.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A.matrix, k); it; ++it)
      at(it.row(), it.col()) = it.value();
  const auto B = ms.constraint_matrix(true);
  for (int r = 0; r < B.outerSize(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(B, r); it; ++it)
      at(n + r, it.col()) = it.value();

  std::vector<double> rhs(static_cast<std::size_t>(N), 0.0);
  rhs[static_cast<std::size_t>(n + i)] = 1.0;
  std::vector<lapack_int> ipiv(static_cast<std::size_t>(N));
  const auto lN = static_cast<lapack_int>(N);
  lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', lN, K.data(), lN, ipiv.data());
  if (info != 0)
    throw SolverError("dense KKT factorization failed, dsytrf info=" + std::to_string(info));
  info = LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', lN, 1, K.data(), lN, ipiv.data(), rhs.data(), lN);
  if (info != 0)
    throw SolverError("dense KKT solve failed, dsytrs info=" + std::to_string(info));

  FineFunction psi = grid.zero_function();
  for (Index k = 0; k < n; ++k)
    psi.values[grid.interior_node(k)] = rhs[static_cast<std::size_t>(k)];
  return psi;
}

double
biorthogonality_residual(const BasisSet &basis, const MeasurementSet &ms)
{
  if (!(basis.grid == ms.grid().key()) || basis.size() != ms.size())
    throw GridMismatch("basis and measurement set do not match");
  const Eigen::SparseMatrix<double> B = ms.constraint_matrix(false);
  const Eigen::MatrixXd G = Eigen::MatrixXd(B * basis.columns);
  return (G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
}

IdealRecovery::IdealRecovery(const FineGrid &grid, const Factorization &F, const MeasurementSet &ms, int threads)
  : grid_(grid)
  , F_(F)
  , B_(ms.constraint_matrix(true))
{
  if (!(ms.grid() == grid) || F.size() != grid.interior_count())
    throw GridMismatch("factorization and measurement set must share the grid");
  Eigen::MatrixXd S(B_.rows(), B_.rows());
  // Columns of A^{-1} B^T are discarded after use to keep memory at |I|^2.
  parallel_for(B_.rows(), threads, [&](Index j) {
    const Eigen::VectorXd bj = B_.row(j).transpose();
    S.col(j) = B_ * F_.solve(bj);
  });
  gram_ = symmetric_part(S);
  llt_ = factor_gram(gram_, "constraint Gram matrix");
}

FineFunction
IdealRecovery::recover(const Eigen::VectorXd &data) const
{
  if (data.size() != gram_.rows())
    throw InvalidArgument("data has " + std::to_string(data.size()) + " entries, expected " +
                          std::to_string(gram_.rows()));
  const Eigen::VectorXd lambda = llt_.solve(data);
  const Eigen::VectorXd rhs = B_.transpose() * lambda;
  return grid_.extend(F_.solve(rhs));
}

void
write_basis_csv(std::ostream &os, const BasisSet &basis)
{
  const auto prec = os.precision(17);
  os << "cell,node,value\n";
  for (int i = 0; i < basis.columns.outerSize(); ++i)
    for (Eigen::SparseMatrix<double>::InnerIterator it(basis.columns, i); it; ++it)
      os << i << ',' << it.row() << ',' << it.value() << '\n';
  os.precision(prec);
}

} // namespace subhom
