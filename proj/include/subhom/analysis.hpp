#pragma once

#include <subhom/basis.hpp>
#include <subhom/fem.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace subhom {

enum class SolutionVariant { recovery, galerkin };

const char *to_string(SolutionVariant v) noexcept;

struct ErrorReport
{
  SolutionVariant variant = SolutionVariant::recovery;
  /// e1 (energy norm of the error).
  double energy = 0.0;
  /// e0 (L2 norm of the error).
  double l2 = 0.0;
  int dim = 0;
  double H = 0.0;
  double h = 0.0;
  /// -1 for the ideal basis.
  int layer = -1;
  std::string coefficient_id;
  std::uint64_t seed = 0;
};

/// sum_i data_i psi_i.
FineFunction recover(const BasisSet &basis, const Eigen::VectorXd &data);

/// Galerkin projection onto span{psi_i}: K c = F with K = Psi^T A Psi and
/// F = Psi^T load.
FineFunction galerkin_solve(const FineGrid &grid,
                            const BasisSet &basis,
                            const SparseOperator &A,
                            const Eigen::VectorXd &load);

/// Norms of reference - candidate. Metadata fields are left for the caller.
ErrorReport error_report(const FineGrid &grid,
                         const FineFunction &reference,
                         const FineFunction &candidate,
                         const SparseOperator &A,
                         const SparseOperator &M,
                         SolutionVariant variant = SolutionVariant::recovery);

/// rho_{p,d}(t): 1 for d < p, log(1+t)^{(d-1)/d} for d = p, t^{(d-p)/p}
/// for d > p.
double rho(int p, int d, double t);

struct TheoryConstants
{
  double C0 = 1.0;
  double C1 = 1.0;
  double C2 = 1.0;
  double a_min = 1.0;
  double a_max = 1.0;
};

/// Geometric decay factor x / (x + 1) with
/// x = C0 sqrt(a_max/a_min) (C1 rho_{2,d}(H/h) + C1 C2 h/H).
/// The constants are not known numerically, so this is a qualitative
/// instrument only.
double beta_bound(double h, double H, int dim, const TheoryConstants &tc);

struct DecayProfile
{
  Index cell = 0;
  /// tail[k] = energy of psi_cell outside N^k, k = 0 .. saturation.
  std::vector<double> tail;
  double total = 0.0;

  /// exp of the least-squares slope of log(tail[k]) over k <= k_max,
  /// using only tails above `floor`.
  double fitted_ratio(int k_max = -1, double floor = 1e-12) const;
};

DecayProfile decay_profile(const FineGrid &grid,
                           const BasisSet &basis,
                           Index cell,
                           const CoarsePartition &partition,
                           const SparseOperator &A);

/// ||ideal_i - localized_i|| in the energy norm.
double localization_distance(const FineGrid &grid,
                             const FineFunction &ideal_i,
                             const FineFunction &localized_i,
                             const SparseOperator &A);

/// Ordinary least-squares slope of y against x.
double least_squares_slope(std::span<const double> x, std::span<const double> y);
double median(std::vector<double> values);

} // namespace subhom
