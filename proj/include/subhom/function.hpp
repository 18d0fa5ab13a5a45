#pragma once

#include <Eigen/Core>

namespace subhom {

struct GridKey
{
  int dim = 0;
  int levels = 0;

  bool operator==(const GridKey &) const = default;
};

/// Nodal values of a multilinear function on every node of a fine grid,
/// boundary nodes included.
struct FineFunction
{
  GridKey grid;
  Eigen::VectorXd values;
};

} // namespace subhom
