#pragma once

#include <subhom/fields.hpp>
#include <subhom/grid.hpp>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <iosfwd>
#include <memory>
#include <mutex>

namespace subhom {

enum class OperatorKind { stiffness, mass };

/// Symmetric operator over the interior nodes of a fine grid.
struct SparseOperator
{
  OperatorKind kind = OperatorKind::stiffness;
  GridKey grid;
  Eigen::SparseMatrix<double> matrix;
  /// Set for stiffness operators.
  std::shared_ptr<const CoefficientField> coefficient;
};

/// Element matrices of the multilinear element on a cube of side `spacing`,
/// corners ordered by bit mask (bit k = upper end along axis k).
Eigen::MatrixXd reference_stiffness(int dim, double spacing);
Eigen::MatrixXd reference_mass(int dim, double spacing);

SparseOperator assemble_stiffness(const FineGrid &grid, const CoefficientField &a);
SparseOperator assemble_mass(const FineGrid &grid);
/// Mass matrix over all nodes, boundary included.
Eigen::SparseMatrix<double> assemble_mass_full(const FineGrid &grid);
/// M_full * f restricted to the interior rows.
Eigen::VectorXd assemble_load(const FineGrid &grid, const FineFunction &f);

/// Nodes strictly inside an inclusive node box, numbered lexicographically.
/// Used for patch-local problems with zero Dirichlet data on the box
/// boundary.
class BoxSpace
{
public:
  BoxSpace(const FineGrid &grid, const Multi &node_lo, const Multi &node_hi);

  Index size() const noexcept { return size_; }
  /// -1 when the node is not a free node of the box.
  Index local_index(const Multi &node) const noexcept;
  Index global_node(Index local) const noexcept;
  const Multi &node_lo() const noexcept { return lo_; }
  const Multi &node_hi() const noexcept { return hi_; }

  /// Stiffness restricted to the box's free nodes, assembled from the
  /// elements inside the box.
  Eigen::SparseMatrix<double> stiffness(const CoefficientField &a) const;

private:
  FineGrid grid_;
  Multi lo_;
  Multi hi_;
  Multi ext_;
  Index size_;
};

struct SolverOptions
{
  double rtol = 1e-10;
  /// Above this many unknowns use preconditioned CG instead of a sparse
  /// Cholesky factorization.
  Index direct_limit = Index{1} << 21;
  int max_iterations = 20000;
};

/// Reusable SPD solve. Direct sparse LDL^T by default; incomplete-Cholesky
/// preconditioned CG for very large systems.
class Factorization
{
public:
  explicit Factorization(Eigen::SparseMatrix<double> matrix, SolverOptions options = {});
  explicit Factorization(const SparseOperator &op, SolverOptions options = {});
  ~Factorization();

  Factorization(const Factorization &) = delete;
  Factorization &operator=(const Factorization &) = delete;

  Index size() const noexcept { return matrix_.rows(); }
  bool is_direct() const noexcept { return direct_ != nullptr; }
  const Eigen::SparseMatrix<double> &matrix() const noexcept { return matrix_; }

  /// Throws SolverError when the relative residual exceeds rtol.
  Eigen::VectorXd solve(const Eigen::VectorXd &rhs) const;

private:
  struct Iterative;

  Eigen::SparseMatrix<double> matrix_;
  SolverOptions options_;
  std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> direct_;
  std::unique_ptr<Iterative> iterative_;
};

FineFunction solve_dirichlet(const FineGrid &grid, const Factorization &A, const Eigen::VectorXd &load);
FineFunction solve_dirichlet(const FineGrid &grid, const SparseOperator &A, const Eigen::VectorXd &load);

struct Norms
{
  double energy = 0.0;
  double l2 = 0.0;
};

/// sqrt(v^T A v) and sqrt(v^T M v) over interior entries; v must vanish on
/// the boundary.
Norms norms(const FineGrid &grid, const FineFunction &v, const SparseOperator &A, const SparseOperator &M);
double energy_norm(const FineGrid &grid, const FineFunction &v, const SparseOperator &A);

/// "row col value" lines, 0-based, one per stored entry.
void write_matrix_coo(std::ostream &os, const Eigen::SparseMatrix<double> &m);

} // namespace subhom
