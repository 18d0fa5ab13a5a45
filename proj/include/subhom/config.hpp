#pragma once

#include <subhom/grid.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace subhom {

enum class ExperimentKind { ideal_sweep, localized_sweep, decay, weighted_sweep };
enum class CoefficientKind { unit, trig1d, multiscale2d, weight_log, weight_power };

const char *to_string(ExperimentKind k) noexcept;
const char *to_string(CoefficientKind k) noexcept;
ExperimentKind parse_experiment_kind(const std::string &s);
CoefficientKind parse_coefficient_kind(const std::string &s);

/// Exact ratio h/H such as 3/4.
struct Ratio
{
  long num = 1;
  long den = 1;

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;
  static Ratio parse(const std::string &s);
  bool operator==(const Ratio &) const = default;
};

/// Declarative description of one experiment. Lengths are given as dyadic
/// exponents (H = 2^-e) so no float parsing is involved.
struct ExperimentConfig
{
  ExperimentKind kind = ExperimentKind::ideal_sweep;
  int dim = 1;
  int levels = 10;
  std::vector<int> H_exponents;
  std::vector<Ratio> ratios;
  /// Weighted sweep only: h = 2^-e.
  std::vector<int> h_exponents;
  std::vector<int> layers;
  CoefficientKind coefficient = CoefficientKind::trig1d;
  std::uint64_t seed = 1;
  int replicates = 1;
  double delta = 0.01;
  /// Weighted sweep: exponent of the power weight; truth weight kind.
  double gamma = 1.0;
  CoefficientKind weight = CoefficientKind::weight_power;
  /// Decay: cells to profile (empty = cell nearest the domain center) and
  /// the last layer used in the geometric fit (-1 = all).
  std::vector<Index> cells;
  int fit_max_k = -1;

  /// Checks ranges and that every (H, h) pair aligns with the fine grid.
  /// Throws ConfigError / AlignmentError naming the offending entry.
  void validate() const;

  /// Subsampled sizes h for the configured points, in sweep order.
  std::vector<std::pair<double, double>> points() const;

  std::map<std::string, std::string> to_map() const;
  std::string to_text() const;
  static ExperimentConfig from_map(const std::map<std::string, std::string> &kv);
  /// Flat "key = value" text; '#' starts a comment.
  static ExperimentConfig parse(const std::string &text);
};

/// Built-in parameter sets. "paper" mirrors the published grids; "desk"
/// is the scaled-down variant used by the acceptance suite.
ExperimentConfig preset(ExperimentKind kind, const std::string &name, int dim);

/// Cell whose center is nearest the domain center (lowest index on ties).
Index center_cell(const CoarsePartition &p);

} // namespace subhom
