#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace subhom {

struct CsvData
{
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position; throws if absent.
  std::size_t column(const std::string &name) const;
  bool has_column(const std::string &name) const;
};

/// Throws ConfigError on ragged rows or a missing header.
CsvData read_csv(std::istream &is);

struct Series
{
  std::string label;
  std::vector<std::pair<double, double>> points;
};

struct Chart
{
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool log_x = true;
  bool log_y = true;
  std::vector<Series> series;
  /// Reference lines y ~ x^s for each listed slope s.
  std::vector<double> slope_guides;
};

/// Endpoints of a reference line of slope `slope` in log-log coordinates,
/// spanning [x0, x1] and passing through (x1, y_anchor).
std::pair<std::pair<double, double>, std::pair<double, double>>
slope_guide(double x0, double x1, double y_anchor, double slope);

std::string render_svg(const Chart &chart);

/// One SVG per figure for each CSV (schema detected from the header):
/// ideal -> energy + L2, localized -> Galerkin/recovery x energy/L2,
/// weighted -> energy + L2 vs h, decay -> tail energy vs k.
std::vector<std::filesystem::path> emit_plots(const std::vector<std::filesystem::path> &csvs,
                                              const std::filesystem::path &out_dir);

} // namespace subhom
