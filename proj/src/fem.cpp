#include <subhom/errors.hpp>
#include <subhom/fem.hpp>

#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <ostream>
#include <sstream>

namespace subhom {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

double
m1(int a, int b, double h)
{
  return a == b ? h / 3.0 : h / 6.0;
}

double
k1(int a, int b, double h)
{
  return a == b ? 1.0 / h : -1.0 / h;
}

void
check_coefficient(const FineGrid &grid, const CoefficientField &a)
{
  if (!(a.grid() == grid.key()) ||
      static_cast<Index>(a.values().size()) != grid.element_count())
    throw GridMismatch("coefficient field does not live on the grid");
  for (double v : a.values())
    if (!(v > 0.0) || !std::isfinite(v))
      throw InvalidArgument("coefficient must be positive and finite, found " + std::to_string(v));
}

} // namespace

Eigen::MatrixXd
reference_stiffness(int dim, double spacing)
{
  const int nc = 1 << dim;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nc, nc);
  for (int a = 0; a < nc; ++a)
    for (int b = 0; b < nc; ++b)
      for (int dir = 0; dir < dim; ++dir) {
        double v = 1.0;
        for (int k = 0; k < dim; ++k) {
          const int ak = (a >> k) & 1, bk = (b >> k) & 1;
          v *= (k == dir) ? k1(ak, bk, spacing) : m1(ak, bk, spacing);
        }
        K(a, b) += v;
      }
  return K;
}

Eigen::MatrixXd
reference_mass(int dim, double spacing)
{
  const int nc = 1 << dim;
  Eigen::MatrixXd M(nc, nc);
  for (int a = 0; a < nc; ++a)
    for (int b = 0; b < nc; ++b) {
      double v = 1.0;
      for (int k = 0; k < dim; ++k)
        v *= m1((a >> k) & 1, (b >> k) & 1, spacing);
      M(a, b) = v;
    }
  return M;
}

SparseOperator
assemble_stiffness(const FineGrid &grid, const CoefficientField &a)
{
  check_coefficient(grid, a);
  const Eigen::MatrixXd Kref = reference_stiffness(grid.dim(), grid.spacing());
  const int nc = grid.corners_per_element();
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(grid.element_count()) * nc * nc);
  std::vector<Index> dof(nc);
  grid.for_each_element([&](const Multi &e, Index ei) {
    for (int c = 0; c < nc; ++c)
      dof[c] = grid.interior_index(grid.element_corner(e, c));
    const double ae = a[ei];
    for (int p = 0; p < nc; ++p) {
      if (dof[p] < 0)
        continue;
      for (int q = 0; q < nc; ++q)
        if (dof[q] >= 0)
          trip.emplace_back(static_cast<int>(dof[p]), static_cast<int>(dof[q]), ae * Kref(p, q));
    }
  });
  SparseOperator op;
  op.kind = OperatorKind::stiffness;
  op.grid = grid.key();
  op.matrix.resize(grid.interior_count(), grid.interior_count());
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  op.coefficient = std::make_shared<const CoefficientField>(a);
  return op;
}

SparseOperator
assemble_mass(const FineGrid &grid)
{
  const Eigen::MatrixXd Mref = reference_mass(grid.dim(), grid.spacing());
  const int nc = grid.corners_per_element();
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(grid.element_count()) * nc * nc);
  std::vector<Index> dof(nc);
  grid.for_each_element([&](const Multi &e, Index) {
    for (int c = 0; c < nc; ++c)
      dof[c] = grid.interior_index(grid.element_corner(e, c));
    for (int p = 0; p < nc; ++p) {
      if (dof[p] < 0)
        continue;
      for (int q = 0; q < nc; ++q)
        if (dof[q] >= 0)
          trip.emplace_back(static_cast<int>(dof[p]), static_cast<int>(dof[q]), Mref(p, q));
    }
  });
  SparseOperator op;
  op.kind = OperatorKind::mass;
  op.grid = grid.key();
  op.matrix.resize(grid.interior_count(), grid.interior_count());
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  return op;
}

Eigen::SparseMatrix<double>
assemble_mass_full(const FineGrid &grid)
{
  const Eigen::MatrixXd Mref = reference_mass(grid.dim(), grid.spacing());
  const int nc = grid.corners_per_element();
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(grid.element_count()) * nc * nc);
  std::vector<Index> node(nc);
  grid.for_each_element([&](const Multi &e, Index) {
    for (int c = 0; c < nc; ++c)
      node[c] = grid.element_corner(e, c);
    for (int p = 0; p < nc; ++p)
      for (int q = 0; q < nc; ++q)
        trip.emplace_back(static_cast<int>(node[p]), static_cast<int>(node[q]), Mref(p, q));
  });
  Eigen::SparseMatrix<double> M(grid.node_count(), grid.node_count());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

Eigen::VectorXd
assemble_load(const FineGrid &grid, const FineFunction &f)
{
  grid.check(f);
  // Element-by-element so no full mass matrix is formed.
  const Eigen::MatrixXd Mref = reference_mass(grid.dim(), grid.spacing());
  const int nc = grid.corners_per_element();
  Eigen::VectorXd load = Eigen::VectorXd::Zero(grid.interior_count());
  Eigen::VectorXd fe(nc);
  std::vector<Index> dof(nc);
  grid.for_each_element([&](const Multi &e, Index) {
    for (int c = 0; c < nc; ++c) {
      const Index node = grid.element_corner(e, c);
      dof[c] = grid.interior_index(node);
      fe[c] = f.values[node];
    }
    const Eigen::VectorXd le = Mref * fe;
    for (int p = 0; p < nc; ++p)
      if (dof[p] >= 0)
        load[dof[p]] += le[p];
  });
  return load;
}

// ---------------------------------------------------------------------------

BoxSpace::BoxSpace(const FineGrid &grid, const Multi &node_lo, const Multi &node_hi)
  : grid_(grid)
  , lo_(node_lo)
  , hi_(node_hi)
  , ext_{1, 1, 1}
  , size_(1)
{
  for (int k = 0; k < grid.dim(); ++k) {
    if (node_lo[k] < 0 || node_hi[k] > grid.elements_per_side() || node_hi[k] - node_lo[k] < 2)
      throw InvalidArgument("node box has no interior nodes or leaves the grid");
    ext_[k] = node_hi[k] - node_lo[k] - 1;
    size_ *= ext_[k];
  }
}

Index
BoxSpace::local_index(const Multi &node) const noexcept
{
  Index idx = 0;
  for (int k = grid_.dim() - 1; k >= 0; --k) {
    if (node[k] <= lo_[k] || node[k] >= hi_[k])
      return -1;
    idx = idx * ext_[k] + (node[k] - lo_[k] - 1);
  }
  return idx;
}

Index
BoxSpace::global_node(Index local) const noexcept
{
  Multi c{0, 0, 0};
  for (int k = 0; k < grid_.dim(); ++k) {
    c[k] = static_cast<int>(local % ext_[k]) + lo_[k] + 1;
    local /= ext_[k];
  }
  return grid_.node_index(c);
}

Eigen::SparseMatrix<double>
BoxSpace::stiffness(const CoefficientField &a) const
{
  const int d = grid_.dim();
  const Eigen::MatrixXd Kref = reference_stiffness(d, grid_.spacing());
  const int nc = grid_.corners_per_element();
  Triplets trip;
  std::vector<Index> dof(nc);
  grid_.for_each_element_in_box(lo_, hi_, [&](const Multi &e, Index ei) {
    for (int c = 0; c < nc; ++c) {
      Multi n = e;
      for (int k = 0; k < d; ++k)
        n[k] += (c >> k) & 1;
      dof[c] = local_index(n);
    }
    const double ae = a[ei];
    for (int p = 0; p < nc; ++p) {
      if (dof[p] < 0)
        continue;
      for (int q = 0; q < nc; ++q)
        if (dof[q] >= 0)
          trip.emplace_back(static_cast<int>(dof[p]), static_cast<int>(dof[q]), ae * Kref(p, q));
    }
  });
  Eigen::SparseMatrix<double> K(size_, size_);
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

// ---------------------------------------------------------------------------

struct Factorization::Iterative
{
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::IncompleteCholesky<double>>
    cg;
  // The Eigen iterative solver records iteration counts in mutable members.
  std::mutex mutex;
};

Factorization::Factorization(Eigen::SparseMatrix<double> matrix, SolverOptions options)
  : matrix_(std::move(matrix))
  , options_(options)
{
  matrix_.makeCompressed();
  if (matrix_.rows() <= options_.direct_limit) {
    direct_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(matrix_);
    if (direct_->info() != Eigen::Success)
      throw SolverError("sparse LDL^T factorization failed (matrix not positive definite?)");
    for (Index k = 0; k < direct_->vectorD().size(); ++k)
      if (!(direct_->vectorD()[k] > 0.0))
        throw SolverError("sparse LDL^T produced a nonpositive pivot; operator is not SPD");
  } else {
    iterative_ = std::make_unique<Iterative>();
    iterative_->cg.setTolerance(options_.rtol * 0.1);
    iterative_->cg.setMaxIterations(options_.max_iterations);
    iterative_->cg.compute(matrix_);
    if (iterative_->cg.info() != Eigen::Success)
      throw SolverError("incomplete Cholesky preconditioner failed");
  }
}

Factorization::Factorization(const SparseOperator &op, SolverOptions options)
  : Factorization(op.matrix, options)
{}

Factorization::~Factorization() = default;

Eigen::VectorXd
Factorization::solve(const Eigen::VectorXd &rhs) const
{
  if (rhs.size() != size())
    throw GridMismatch("right-hand side has wrong length");
  const double bnorm = rhs.norm();
  if (bnorm == 0.0)
    return Eigen::VectorXd::Zero(size());

  Eigen::VectorXd x;
  if (direct_) {
    x = direct_->solve(rhs);
    // One step of iterative refinement if the residual is marginal.
    Eigen::VectorXd r = rhs - matrix_ * x;
    if (r.norm() > options_.rtol * bnorm) {
      x += direct_->solve(r);
      r = rhs - matrix_ * x;
    }
    if (r.norm() > options_.rtol * bnorm) {
      std::ostringstream os;
      os << "direct solve residual " << r.norm() / bnorm << " exceeds rtol " << options_.rtol;
      throw SolverError(os.str());
    }
    return x;
  }

  std::lock_guard lock(iterative_->mutex);
  x = iterative_->cg.solve(rhs);
  const double res = (rhs - matrix_ * x).norm() / bnorm;
  if (res > options_.rtol) {
    std::ostringstream os;
    os << "PCG stopped after " << iterative_->cg.iterations() << " iterations with residual "
       << res << " > rtol " << options_.rtol;
    throw SolverError(os.str());
  }
  return x;
}

FineFunction
solve_dirichlet(const FineGrid &grid, const Factorization &A, const Eigen::VectorXd &load)
{
  if (A.size() != grid.interior_count())
    throw GridMismatch("operator size does not match the grid");
  return grid.extend(A.solve(load));
}

FineFunction
solve_dirichlet(const FineGrid &grid, const SparseOperator &A, const Eigen::VectorXd &load)
{
  if (A.kind != OperatorKind::stiffness)
    throw InvalidArgument("solve_dirichlet needs a stiffness operator");
  const Factorization F(A);
  return solve_dirichlet(grid, F, load);
}

namespace {

Eigen::VectorXd
interior_values_checked(const FineGrid &grid, const FineFunction &v, const SparseOperator &op)
{
  if (!(op.grid == grid.key()))
    throw GridMismatch("operator does not live on the grid");
  grid.check(v);
  for (Index node = 0; node < grid.node_count(); ++node)
    if (v.values[node] != 0.0 && grid.is_boundary_node(node))
      throw InvalidArgument("function does not vanish on the boundary");
  return grid.restrict_to_interior(v);
}

} // namespace

double
energy_norm(const FineGrid &grid, const FineFunction &v, const SparseOperator &A)
{
  const Eigen::VectorXd x = interior_values_checked(grid, v, A);
  return std::sqrt(std::max(0.0, x.dot(A.matrix * x)));
}

Norms
norms(const FineGrid &grid, const FineFunction &v, const SparseOperator &A, const SparseOperator &M)
{
  const Eigen::VectorXd x = interior_values_checked(grid, v, A);
  if (!(M.grid == grid.key()))
    throw GridMismatch("mass operator does not live on the grid");
  return {std::sqrt(std::max(0.0, x.dot(A.matrix * x))),
          std::sqrt(std::max(0.0, x.dot(M.matrix * x)))};
}

void
write_matrix_coo(std::ostream &os, const Eigen::SparseMatrix<double> &m)
{
  const auto prec = os.precision(17);
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  os.precision(prec);
}

} // namespace subhom
