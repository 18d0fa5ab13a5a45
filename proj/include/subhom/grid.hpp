#pragma once

#include <subhom/function.hpp>

#include <Eigen/SparseCore>

#include <array>
#include <cstdint>
#include <vector>

namespace subhom {

using Index = std::int64_t;

/// Integer coordinates; only the first `dim` entries are meaningful.
using Multi = std::array<int, 3>;

/// Uniform dyadic grid on [0,1]^d with 2^levels elements per side.
///
/// Nodes and elements are numbered lexicographically with the first
/// coordinate running fastest. Interior nodes get their own dense numbering
/// in the same order; that numbering indexes every operator row.
class FineGrid
{
public:
  static constexpr Index default_node_budget = Index{1} << 22;

  FineGrid(int dim, int levels, Index node_budget = default_node_budget);

  int dim() const noexcept { return dim_; }
  int levels() const noexcept { return levels_; }
  double spacing() const noexcept { return spacing_; }
  int elements_per_side() const noexcept { return n_; }
  int nodes_per_side() const noexcept { return n_ + 1; }
  Index node_count() const noexcept { return node_count_; }
  Index element_count() const noexcept { return element_count_; }
  Index interior_count() const noexcept { return interior_count_; }
  int corners_per_element() const noexcept { return 1 << dim_; }
  GridKey key() const noexcept { return {dim_, levels_}; }

  Index node_index(const Multi &c) const noexcept;
  Multi node_coords(Index node) const noexcept;
  Index element_index(const Multi &e) const noexcept;
  Multi element_coords(Index element) const noexcept;

  bool is_boundary_node(Index node) const noexcept;
  /// -1 for boundary nodes.
  Index interior_index(Index node) const noexcept;
  Index interior_node(Index interior) const noexcept;

  std::array<double, 3> node_point(Index node) const noexcept;
  std::array<double, 3> element_center(Index element) const noexcept;

  /// Corner `corner` (bit k set = upper end along axis k) of element `e`.
  Index element_corner(const Multi &e, int corner) const noexcept;

  /// Calls fn(element_coords, element_index) for elements with
  /// lo[k] <= e[k] < hi[k], lexicographic order.
  template <class Fn>
  void for_each_element_in_box(const Multi &lo, const Multi &hi, Fn &&fn) const
  {
    Multi e{0, 0, 0};
    const int z_lo = dim_ > 2 ? lo[2] : 0, z_hi = dim_ > 2 ? hi[2] : 1;
    const int y_lo = dim_ > 1 ? lo[1] : 0, y_hi = dim_ > 1 ? hi[1] : 1;
    for (e[2] = z_lo; e[2] < z_hi; ++e[2])
      for (e[1] = y_lo; e[1] < y_hi; ++e[1])
        for (e[0] = lo[0]; e[0] < hi[0]; ++e[0])
          fn(static_cast<const Multi &>(e), element_index(e));
  }

  template <class Fn>
  void for_each_element(Fn &&fn) const
  {
    for_each_element_in_box({0, 0, 0}, {n_, n_, n_}, std::forward<Fn>(fn));
  }

  /// Interior-node vector -> full nodal vector with zero boundary.
  FineFunction extend(const Eigen::VectorXd &interior_values) const;
  /// Full nodal vector -> interior entries.
  Eigen::VectorXd restrict_to_interior(const FineFunction &v) const;
  FineFunction zero_function() const;
  void check(const FineFunction &v) const;

  bool operator==(const FineGrid &o) const noexcept { return key() == o.key(); }

private:
  int dim_;
  int levels_;
  int n_;
  double spacing_;
  Index node_count_;
  Index element_count_;
  Index interior_count_;
};

FineGrid build_fine_grid(int dim, int levels);

/// Uniform partition of [0,1]^d into cubes of side H = 2^{-coarse_level}.
/// Cells are numbered lexicographically by integer coordinates, first
/// coordinate fastest.
class CoarsePartition
{
public:
  CoarsePartition(const FineGrid &grid, int coarse_level);

  const FineGrid &grid() const noexcept { return grid_; }
  int dim() const noexcept { return grid_.dim(); }
  int coarse_level() const noexcept { return coarse_level_; }
  double H() const noexcept { return H_; }
  int cells_per_side() const noexcept { return m_; }
  /// Fine elements along one side of a cell.
  int elements_per_cell_side() const noexcept { return r_; }
  Index cell_count() const noexcept { return cell_count_; }

  Index cell_index(const Multi &c) const noexcept;
  Multi cell_coords(Index cell) const noexcept;
  std::array<double, 3> cell_center(Index cell) const noexcept;
  /// Closed-cube intersection; every cell is adjacent to itself.
  bool adjacent(Index a, Index b) const noexcept;
  /// Cell containing the element (elements never straddle cells).
  Index cell_of_element(const Multi &e) const noexcept;
  /// Distance from a point to the nearest cell center.
  double distance_to_centers(const std::array<double, 3> &x) const noexcept;

private:
  FineGrid grid_;
  int coarse_level_;
  double H_;
  int m_;
  int r_;
  Index cell_count_;
};

CoarsePartition build_coarse_partition(const FineGrid &grid, double H);

/// Subsampled cubes of side h centered in each coarse cell, together with
/// the L1-normalised indicator functionals 1/h^d * 1_{cube}.
class MeasurementSet
{
public:
  MeasurementSet(const CoarsePartition &partition, double h);

  const CoarsePartition &partition() const noexcept { return partition_; }
  const FineGrid &grid() const noexcept { return partition_.grid(); }
  double h() const noexcept { return h_; }
  double H() const noexcept { return partition_.H(); }
  double ratio() const noexcept { return h_ / partition_.H(); }
  Index size() const noexcept { return partition_.cell_count(); }
  /// Side of the subcube in fine elements.
  int subcube_elements() const noexcept { return sub_; }
  /// Offset of the subcube from its cell's lower corner, in fine elements.
  int offset_elements() const noexcept { return offset_; }

  /// Half-open element box [lo, hi) of the subcube of `cell`.
  void subcube_box(Index cell, Multi &lo, Multi &hi) const noexcept;

  /// Row i holds the exact integrals (1/h^d) * int_{subcube_i} chi_p of the
  /// nodal shape functions. `interior_only` restricts columns to interior
  /// nodes (numbered by FineGrid::interior_index).
  Eigen::SparseMatrix<double, Eigen::RowMajor> constraint_matrix(bool interior_only) const;

private:
  CoarsePartition partition_;
  double h_;
  int sub_;
  int offset_;
};

MeasurementSet build_measurement_set(const CoarsePartition &partition, double h);

/// [v, phi_i] for every cell, exact for nodal multilinear v.
Eigen::VectorXd measure(const FineFunction &v, const MeasurementSet &ms);

/// Oversampled patch N^l of a coarse cell.
struct PatchIndexSet
{
  Index center = 0;
  int layer = 0;
  /// Sorted cell indices.
  std::vector<Index> members;
  /// Inclusive cell-coordinate box.
  Multi cell_lo{0, 0, 0};
  Multi cell_hi{0, 0, 0};
  /// Inclusive fine-node box of the closed patch.
  Multi node_lo{0, 0, 0};
  Multi node_hi{0, 0, 0};

  bool contains(Index cell) const;
  bool is_whole_domain(const CoarsePartition &p) const;
};

PatchIndexSet patch(const CoarsePartition &partition, Index cell, int layer);

} // namespace subhom
