#pragma once

#include <subhom/fem.hpp>
#include <subhom/grid.hpp>

#include <Eigen/Cholesky>
#include <Eigen/SparseCore>

#include <iosfwd>
#include <string>
#include <vector>

namespace subhom {

enum class BasisVariant { ideal, localized };

/// Multiscale basis {psi_i}, one column per coarse cell, stored over all
/// fine nodes (boundary rows are zero).
struct BasisSet
{
  BasisVariant variant = BasisVariant::ideal;
  /// Oversampling layer; -1 for the ideal (unlocalized) basis.
  int layer = -1;
  GridKey grid;
  double H = 0.0;
  double h = 0.0;
  std::string coefficient_id;
  Eigen::SparseMatrix<double> columns;
  /// Support patch per column; whole domain for the ideal basis.
  std::vector<PatchIndexSet> patches;
  /// Constraint Gram matrix B A^{-1} B^T (ideal basis only).
  Eigen::MatrixXd gram;

  Index size() const noexcept { return columns.cols(); }
  FineFunction column(Index i) const;
};

/// Minimizers of the energy subject to [psi_i, phi_j] = delta_ij over the
/// whole domain, via the Schur complement S = B A^{-1} B^T.
BasisSet ideal_basis(const FineGrid &grid,
                     const SparseOperator &A,
                     const Factorization &F,
                     const MeasurementSet &ms,
                     int threads = 1);

/// Same minimization restricted to H^1_0(N^l(omega_i)). Only constraints
/// whose subcube lies in the patch are kept; the others hold trivially.
BasisSet localized_basis(const FineGrid &grid,
                         const CoefficientField &a,
                         const CoarsePartition &partition,
                         const MeasurementSet &ms,
                         int layer,
                         int threads = 1,
                         SolverOptions options = {});

/// Brute-force column i: dense symmetric indefinite solve of the full
/// saddle-point system. Limited to small grids.
FineFunction dense_kkt_oracle(const FineGrid &grid,
                              const SparseOperator &A,
                              const MeasurementSet &ms,
                              Index i,
                              Index budget = 5000);

/// max_{i,j} |[psi_i, phi_j] - delta_ij|.
double biorthogonality_residual(const BasisSet &basis, const MeasurementSet &ms);

/// Applies the ideal basis without storing it: recover(data) =
/// A^{-1} B^T S^{-1} data. Holds only the |I| x |I| Schur factor.
class IdealRecovery
{
public:
  IdealRecovery(const FineGrid &grid, const Factorization &F, const MeasurementSet &ms, int threads = 1);

  FineFunction recover(const Eigen::VectorXd &data) const;
  const Eigen::MatrixXd &gram() const noexcept { return gram_; }

private:
  FineGrid grid_;
  const Factorization &F_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> B_;
  Eigen::MatrixXd gram_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// "cell,node,value" rows for the nonzero entries.
void write_basis_csv(std::ostream &os, const BasisSet &basis);

} // namespace subhom
