#pragma once

#include <subhom/analysis.hpp>
#include <subhom/config.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace subhom {

struct IdealRow
{
  int dim = 0;
  int levels = 0;
  double H = 0.0;
  double h = 0.0;
  std::string ratio;
  std::uint64_t seed = 0;
  double e1 = 0.0;
  double e0 = 0.0;
  /// max |measure(recovered) - data|.
  double data_residual = 0.0;
};

struct LocalizedRow
{
  int dim = 0;
  int levels = 0;
  double H = 0.0;
  double h = 0.0;
  std::string ratio;
  int layer = 0;
  std::uint64_t seed = 0;
  double e1_recovery = 0.0;
  double e0_recovery = 0.0;
  double e1_galerkin = 0.0;
  double e0_galerkin = 0.0;
  double biorth = 0.0;
};

struct DecayRow
{
  Index cell = 0;
  int k = 0;
  double tail = 0.0;
  double total = 0.0;
  double fitted_ratio = 0.0;
};

struct WeightedRow
{
  int dim = 0;
  int levels = 0;
  double H = 0.0;
  double h = 0.0;
  /// "unit" or "weighted": coefficient used to build the recovery basis.
  std::string variant;
  std::uint64_t seed = 0;
  /// H^1_0 seminorm of the error.
  double e1 = 0.0;
  double e0 = 0.0;
  double biorth = 0.0;
};

/// Wall-clock seconds per named stage.
using StageTimings = std::vector<std::pair<std::string, double>>;

/// Seed of the right-hand side for replicate r.
std::uint64_t replicate_seed(const ExperimentConfig &cfg, int replicate) noexcept;

/// Rows ordered by (H, ratio, replicate) as listed in the config.
std::vector<IdealRow> run_ideal_sweep(const ExperimentConfig &cfg, int threads = 1, StageTimings *timings = nullptr);
/// Rows ordered by (H, ratio, layer, replicate).
std::vector<LocalizedRow> run_localized_sweep(const ExperimentConfig &cfg, int threads = 1, StageTimings *timings = nullptr);
/// One row per (cell, k).
std::vector<DecayRow> run_decay(const ExperimentConfig &cfg, int threads = 1, StageTimings *timings = nullptr);
/// Rows ordered by (h, replicate, variant) with unit before weighted.
std::vector<WeightedRow> run_weighted_sweep(const ExperimentConfig &cfg, int threads = 1, StageTimings *timings = nullptr);

void write_csv(std::ostream &os, const std::vector<IdealRow> &rows);
void write_csv(std::ostream &os, const std::vector<LocalizedRow> &rows);
void write_csv(std::ostream &os, const std::vector<DecayRow> &rows);
void write_csv(std::ostream &os, const std::vector<WeightedRow> &rows);

/// Runs the configured experiment, writing `<kind>.csv` and
/// `manifest.json` into out_dir. Returns the CSV path.
std::filesystem::path run_experiment(const ExperimentConfig &cfg,
                                     const std::filesystem::path &out_dir,
                                     int threads = 1);

/// Config stored in a manifest written by run_experiment.
ExperimentConfig config_from_manifest(const std::filesystem::path &manifest);

/// Checks that every row of a sweep CSV (ideal, localized, weighted) still
/// passes the grid-alignment rules. Throws AlignmentError otherwise.
void revalidate_csv(std::istream &is);

std::string software_version();

} // namespace subhom
