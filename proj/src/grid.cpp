#include <subhom/errors.hpp>
#include <subhom/grid.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace subhom {

namespace {

Index
ipow(Index base, int exp)
{
  Index r = 1;
  for (int k = 0; k < exp; ++k)
    r *= base;
  return r;
}

// Returns k if x == 2^{-k} exactly, -1 otherwise.
int
dyadic_level(double x)
{
  if (!(x > 0.0) || x > 1.0)
    return -1;
  int exp = 0;
  const double mant = std::frexp(x, &exp);
  if (mant != 0.5)
    return -1;
  return 1 - exp;
}

// x / unit as an integer, or -1 if x is not an integer multiple of unit.
long
integer_multiple(double x, double unit)
{
  const double q = x / unit;
  const double r = std::round(q);
  if (std::abs(q - r) > 1e-9 * std::max(1.0, std::abs(q)))
    return -1;
  return static_cast<long>(r);
}

} // namespace

FineGrid::FineGrid(int dim, int levels, Index node_budget)
  : dim_(dim)
  , levels_(levels)
{
  if (dim < 1 || dim > 3)
    throw InvalidArgument("dimension must be 1, 2 or 3, got " + std::to_string(dim));
  if (levels < 1 || levels > 30)
    throw InvalidArgument("levels must be in [1, 30], got " + std::to_string(levels));
  n_ = 1 << levels;
  spacing_ = std::ldexp(1.0, -levels);
  // Overflow-safe budget check before computing counts.
  const double nodes = std::pow(static_cast<double>(n_ + 1), dim);
  if (nodes > static_cast<double>(node_budget)) {
    std::ostringstream os;
    os << "grid with d=" << dim << ", levels=" << levels << " has " << nodes
       << " nodes, exceeding the node budget " << node_budget;
    throw InvalidArgument(os.str());
  }
  node_count_ = ipow(n_ + 1, dim);
  element_count_ = ipow(n_, dim);
  interior_count_ = ipow(n_ - 1, dim);
}

Index
FineGrid::node_index(const Multi &c) const noexcept
{
  Index idx = 0;
  for (int k = dim_ - 1; k >= 0; --k)
    idx = idx * (n_ + 1) + c[k];
  return idx;
}

Multi
FineGrid::node_coords(Index node) const noexcept
{
  Multi c{0, 0, 0};
  for (int k = 0; k < dim_; ++k) {
    c[k] = static_cast<int>(node % (n_ + 1));
    node /= (n_ + 1);
  }
  return c;
}

Index
FineGrid::element_index(const Multi &e) const noexcept
{
  Index idx = 0;
  for (int k = dim_ - 1; k >= 0; --k)
    idx = idx * n_ + e[k];
  return idx;
}

Multi
FineGrid::element_coords(Index element) const noexcept
{
  Multi c{0, 0, 0};
  for (int k = 0; k < dim_; ++k) {
    c[k] = static_cast<int>(element % n_);
    element /= n_;
  }
  return c;
}

bool
FineGrid::is_boundary_node(Index node) const noexcept
{
  const Multi c = node_coords(node);
  for (int k = 0; k < dim_; ++k)
    if (c[k] == 0 || c[k] == n_)
      return true;
  return false;
}

Index
FineGrid::interior_index(Index node) const noexcept
{
  const Multi c = node_coords(node);
  Index idx = 0;
  for (int k = dim_ - 1; k >= 0; --k) {
    if (c[k] == 0 || c[k] == n_)
      return -1;
    idx = idx * (n_ - 1) + (c[k] - 1);
  }
  return idx;
}

Index
FineGrid::interior_node(Index interior) const noexcept
{
  Multi c{0, 0, 0};
  for (int k = 0; k < dim_; ++k) {
    c[k] = static_cast<int>(interior % (n_ - 1)) + 1;
    interior /= (n_ - 1);
  }
  return node_index(c);
}

std::array<double, 3>
FineGrid::node_point(Index node) const noexcept
{
  const Multi c = node_coords(node);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int k = 0; k < dim_; ++k)
    x[k] = c[k] * spacing_;
  return x;
}

std::array<double, 3>
FineGrid::element_center(Index element) const noexcept
{
  const Multi c = element_coords(element);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int k = 0; k < dim_; ++k)
    x[k] = (c[k] + 0.5) * spacing_;
  return x;
}

Index
FineGrid::element_corner(const Multi &e, int corner) const noexcept
{
  Multi c = e;
  for (int k = 0; k < dim_; ++k)
    c[k] += (corner >> k) & 1;
  return node_index(c);
}

FineFunction
FineGrid::extend(const Eigen::VectorXd &interior_values) const
{
  if (interior_values.size() != interior_count_)
    throw GridMismatch("interior vector has " + std::to_string(interior_values.size()) +
                       " entries, grid has " + std::to_string(interior_count_) +
                       " interior nodes");
  FineFunction f = zero_function();
  for (Index k = 0; k < interior_count_; ++k)
    f.values[interior_node(k)] = interior_values[k];
  return f;
}

Eigen::VectorXd
FineGrid::restrict_to_interior(const FineFunction &v) const
{
  check(v);
  Eigen::VectorXd out(interior_count_);
  for (Index k = 0; k < interior_count_; ++k)
    out[k] = v.values[interior_node(k)];
  return out;
}

FineFunction
FineGrid::zero_function() const
{
  return {key(), Eigen::VectorXd::Zero(node_count_)};
}

void
FineGrid::check(const FineFunction &v) const
{
  if (!(v.grid == key()) || v.values.size() != node_count_) {
    std::ostringstream os;
    os << "function lives on grid (d=" << v.grid.dim << ", levels=" << v.grid.levels
       << ", " << v.values.size() << " values), expected (d=" << dim_
       << ", levels=" << levels_ << ", " << node_count_ << " values)";
    throw GridMismatch(os.str());
  }
}

FineGrid
build_fine_grid(int dim, int levels)
{
  return FineGrid(dim, levels);
}

// ---------------------------------------------------------------------------

CoarsePartition::CoarsePartition(const FineGrid &grid, int coarse_level)
  : grid_(grid)
  , coarse_level_(coarse_level)
{
  if (coarse_level < 0 || coarse_level > grid.levels())
    throw InvalidArgument("coarse level " + std::to_string(coarse_level) +
                          " outside [0, " + std::to_string(grid.levels()) + "]");
  H_ = std::ldexp(1.0, -coarse_level);
  m_ = 1 << coarse_level;
  r_ = 1 << (grid.levels() - coarse_level);
  cell_count_ = ipow(m_, grid.dim());
}

Index
CoarsePartition::cell_index(const Multi &c) const noexcept
{
  Index idx = 0;
  for (int k = dim() - 1; k >= 0; --k)
    idx = idx * m_ + c[k];
  return idx;
}

Multi
CoarsePartition::cell_coords(Index cell) const noexcept
{
  Multi c{0, 0, 0};
  for (int k = 0; k < dim(); ++k) {
    c[k] = static_cast<int>(cell % m_);
    cell /= m_;
  }
  return c;
}

std::array<double, 3>
CoarsePartition::cell_center(Index cell) const noexcept
{
  const Multi c = cell_coords(cell);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int k = 0; k < dim(); ++k)
    x[k] = (c[k] + 0.5) * H_;
  return x;
}

bool
CoarsePartition::adjacent(Index a, Index b) const noexcept
{
  const Multi ca = cell_coords(a), cb = cell_coords(b);
  for (int k = 0; k < dim(); ++k)
    if (std::abs(ca[k] - cb[k]) > 1)
      return false;
  return true;
}

Index
CoarsePartition::cell_of_element(const Multi &e) const noexcept
{
  Multi c{0, 0, 0};
  for (int k = 0; k < dim(); ++k)
    c[k] = e[k] / r_;
  return cell_index(c);
}

double
CoarsePartition::distance_to_centers(const std::array<double, 3> &x) const noexcept
{
  // The nearest lattice center is the center of the cell containing x.
  double s = 0.0;
  for (int k = 0; k < dim(); ++k) {
    const int c = std::clamp(static_cast<int>(std::floor(x[k] / H_)), 0, m_ - 1);
    const double diff = x[k] - (c + 0.5) * H_;
    s += diff * diff;
  }
  return std::sqrt(s);
}

CoarsePartition
build_coarse_partition(const FineGrid &grid, double H)
{
  const int level = dyadic_level(H);
  if (level < 0) {
    std::ostringstream os;
    os << "coarse size H=" << H << " is not of the form 2^-k";
    throw AlignmentError(os.str());
  }
  if (level > grid.levels()) {
    std::ostringstream os;
    os << "coarse size H=" << H << " is smaller than the fine spacing " << grid.spacing();
    throw AlignmentError(os.str());
  }
  return CoarsePartition(grid, level);
}

// ---------------------------------------------------------------------------

MeasurementSet::MeasurementSet(const CoarsePartition &partition, double h)
  : partition_(partition)
  , h_(h)
{
  const double H = partition.H();
  const double hg = partition.grid().spacing();
  if (!(h > 0.0) || h > H) {
    std::ostringstream os;
    os << "subsampled size h=" << h << " must satisfy 0 < h <= H=" << H;
    throw InvalidArgument(os.str());
  }
  const long sub = integer_multiple(h, hg);
  if (sub < 1) {
    std::ostringstream os;
    os << "subsampled size h=" << h << " is not a multiple of the fine spacing " << hg;
    throw AlignmentError(os.str());
  }
  const long off = integer_multiple(0.5 * (H - h), hg);
  if (off < 0) {
    std::ostringstream os;
    os << "subcube offset (H-h)/2=" << 0.5 * (H - h)
       << " is not a multiple of the fine spacing " << hg;
    throw AlignmentError(os.str());
  }
  sub_ = static_cast<int>(sub);
  offset_ = static_cast<int>(off);
  h_ = sub_ * hg;
}

void
MeasurementSet::subcube_box(Index cell, Multi &lo, Multi &hi) const noexcept
{
  const Multi c = partition_.cell_coords(cell);
  const int r = partition_.elements_per_cell_side();
  lo = hi = {0, 0, 0};
  for (int k = 0; k < partition_.dim(); ++k) {
    lo[k] = c[k] * r + offset_;
    hi[k] = lo[k] + sub_;
  }
}

Eigen::SparseMatrix<double, Eigen::RowMajor>
MeasurementSet::constraint_matrix(bool interior_only) const
{
  const FineGrid &g = grid();
  const int d = g.dim();
  // Each element contributes vol/2^d to each of its corners; normalised by
  // the subcube volume h^d this is 1 / (sub^d 2^d).
  const double w = 1.0 / (std::pow(static_cast<double>(sub_), d) * (1 << d));
  const Index cols = interior_only ? g.interior_count() : g.node_count();

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(size()) *
               static_cast<std::size_t>(std::pow(sub_ + 1, d)));
  for (Index i = 0; i < size(); ++i) {
    Multi lo, hi;
    subcube_box(i, lo, hi);
    g.for_each_element_in_box(lo, hi, [&](const Multi &e, Index) {
      for (int c = 0; c < g.corners_per_element(); ++c) {
        const Index node = g.element_corner(e, c);
        const Index col = interior_only ? g.interior_index(node) : node;
        if (col >= 0)
          trip.emplace_back(static_cast<int>(i), static_cast<int>(col), w);
      }
    });
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> B(size(), cols);
  B.setFromTriplets(trip.begin(), trip.end());
  return B;
}

MeasurementSet
build_measurement_set(const CoarsePartition &partition, double h)
{
  return MeasurementSet(partition, h);
}

Eigen::VectorXd
measure(const FineFunction &v, const MeasurementSet &ms)
{
  const FineGrid &g = ms.grid();
  g.check(v);
  const int d = g.dim();
  const double w = 1.0 / (std::pow(static_cast<double>(ms.subcube_elements()), d) * (1 << d));
  Eigen::VectorXd out(ms.size());
  for (Index i = 0; i < ms.size(); ++i) {
    Multi lo, hi;
    ms.subcube_box(i, lo, hi);
    double s = 0.0;
    g.for_each_element_in_box(lo, hi, [&](const Multi &e, Index) {
      for (int c = 0; c < g.corners_per_element(); ++c)
        s += v.values[g.element_corner(e, c)];
    });
    out[i] = w * s;
  }
  return out;
}

// ---------------------------------------------------------------------------

bool
PatchIndexSet::contains(Index cell) const
{
  return std::binary_search(members.begin(), members.end(), cell);
}

bool
PatchIndexSet::is_whole_domain(const CoarsePartition &p) const
{
  return static_cast<Index>(members.size()) == p.cell_count();
}

PatchIndexSet
patch(const CoarsePartition &partition, Index cell, int layer)
{
  if (cell < 0 || cell >= partition.cell_count())
    throw InvalidArgument("cell index " + std::to_string(cell) + " out of range");
  if (layer < 0)
    throw InvalidArgument("layer must be nonnegative");

  // Closed cubes touching at a corner intersect, so each layer grows the
  // patch by one cell in every direction (Chebyshev ball), clipped to the
  // domain.
  PatchIndexSet p;
  p.center = cell;
  p.layer = layer;
  const int d = partition.dim();
  const int m = partition.cells_per_side();
  const int r = partition.elements_per_cell_side();
  const Multi c = partition.cell_coords(cell);
  for (int k = 0; k < d; ++k) {
    p.cell_lo[k] = std::max(0, c[k] - layer);
    p.cell_hi[k] = std::min(m - 1, c[k] + layer);
    p.node_lo[k] = p.cell_lo[k] * r;
    p.node_hi[k] = (p.cell_hi[k] + 1) * r;
  }
  Multi q{0, 0, 0};
  const int z_lo = d > 2 ? p.cell_lo[2] : 0, z_hi = d > 2 ? p.cell_hi[2] : 0;
  const int y_lo = d > 1 ? p.cell_lo[1] : 0, y_hi = d > 1 ? p.cell_hi[1] : 0;
  for (q[2] = z_lo; q[2] <= z_hi; ++q[2])
    for (q[1] = y_lo; q[1] <= y_hi; ++q[1])
      for (q[0] = p.cell_lo[0]; q[0] <= p.cell_hi[0]; ++q[0])
        p.members.push_back(partition.cell_index(q));
  std::sort(p.members.begin(), p.members.end());
  return p;
}

} // namespace subhom
