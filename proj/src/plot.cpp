#include <subhom/analysis.hpp>
#include <subhom/errors.hpp>
#include <subhom/plot.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <sstream>

namespace subhom {

namespace {

std::vector<std::string>
split(const std::string &line)
{
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ','))
    out.push_back(cell);
  if (!line.empty() && line.back() == ',')
    out.emplace_back();
  return out;
}

double
to_double(const std::string &s)
{
  try {
    return std::stod(s);
  } catch (...) {
    throw ConfigError("CSV field '" + s + "' is not numeric");
  }
}

std::string
escape(const std::string &s)
{
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

const char *palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

// Median of y per (series label, x), series in first-appearance order.
std::vector<Series>
aggregate(const CsvData &csv, auto &&label_of, std::size_t xcol, std::size_t ycol)
{
  std::vector<std::string> order;
  std::map<std::string, std::map<double, std::vector<double>>> acc;
  for (const auto &row : csv.rows) {
    const std::string label = label_of(row);
    if (!acc.count(label))
      order.push_back(label);
    acc[label][to_double(row[xcol])].push_back(to_double(row[ycol]));
  }
  std::vector<Series> out;
  for (const auto &label : order) {
    Series s{label, {}};
    for (const auto &[x, ys] : acc[label])
      s.points.emplace_back(x, median(ys));
    out.push_back(std::move(s));
  }
  return out;
}

void
write_file(const std::filesystem::path &p, const std::string &content)
{
  std::ofstream f(p, std::ios::binary);
  if (!f)
    throw Error("io", "cannot write " + p.string());
  f << content;
}

} // namespace

std::size_t
CsvData::column(const std::string &name) const
{
  for (std::size_t k = 0; k < header.size(); ++k)
    if (header[k] == name)
      return k;
  throw ConfigError("CSV has no column '" + name + "'");
}

bool
CsvData::has_column(const std::string &name) const
{
  return std::find(header.begin(), header.end(), name) != header.end();
}

CsvData
read_csv(std::istream &is)
{
  CsvData out;
  std::string line;
  if (!std::getline(is, line) || line.empty())
    throw ConfigError("CSV has no header");
  out.header = split(line);
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty())
      continue;
    auto cells = split(line);
    if (cells.size() != out.header.size())
      throw ConfigError("CSV line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                        " fields, header has " + std::to_string(out.header.size()));
    out.rows.push_back(std::move(cells));
  }
  return out;
}

std::pair<std::pair<double, double>, std::pair<double, double>>
slope_guide(double x0, double x1, double y_anchor, double slope)
{
  // y = y_anchor * (x / x1)^slope
  return {{x0, y_anchor * std::pow(x0 / x1, slope)}, {x1, y_anchor}};
}

std::string
render_svg(const Chart &chart)
{
  constexpr double W = 640, Hh = 440, left = 80, right = 170, top = 40, bottom = 60;
  const double pw = W - left - right, ph = Hh - top - bottom;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto &s : chart.series)
    for (const auto &[x, y] : s.points) {
      if ((chart.log_x && !(x > 0)) || (chart.log_y && !(y > 0)))
        continue;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (!(xmin <= xmax) || !(ymin <= ymax))
    throw ConfigError("chart '" + chart.title + "' has no plottable points");

  // Guides start at half the largest value at the largest x and are included
  // in the axis range.
  std::vector<std::pair<std::pair<double, double>, std::pair<double, double>>> guides;
  for (double slope : chart.slope_guides) {
    guides.push_back(slope_guide(xmin, xmax, ymax / 2.0, slope));
    ymin = std::min(ymin, guides.back().first.second);
  }

  auto tx = [&](double x) { return chart.log_x ? std::log10(x) : x; };
  auto ty = [&](double y) { return chart.log_y ? std::log10(y) : y; };
  double X0 = tx(xmin), X1 = tx(xmax), Y0 = ty(ymin), Y1 = ty(ymax);
  if (X1 - X0 < 1e-12) {
    X0 -= 0.5;
    X1 += 0.5;
  }
  if (Y1 - Y0 < 1e-12) {
    Y0 -= 0.5;
    Y1 += 0.5;
  }
  const double padx = 0.05 * (X1 - X0), pady = 0.08 * (Y1 - Y0);
  X0 -= padx;
  X1 += padx;
  Y0 -= pady;
  Y1 += pady;
  auto px = [&](double x) { return left + (tx(x) - X0) / (X1 - X0) * pw; };
  auto py = [&](double y) { return top + (Y1 - ty(y)) / (Y1 - Y0) * ph; };

  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hh
     << "\" viewBox=\"0 0 " << W << ' ' << Hh << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
     << escape(chart.title) << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  // Ticks at integer powers of ten (log axes) or at integers (linear axes).
  auto ticks = [](double lo, double hi, bool log) {
    std::vector<double> t;
    for (double v = std::ceil(lo); v <= std::floor(hi) && t.size() < 40; v += 1.0)
      t.push_back(log ? std::pow(10.0, v) : v);
    return t;
  };
  for (double x : ticks(X0, X1, chart.log_x))
    os << "<line x1=\"" << px(x) << "\" y1=\"" << top + ph << "\" x2=\"" << px(x) << "\" y2=\""
       << top + ph + 5 << "\" stroke=\"black\"/><text x=\"" << px(x) << "\" y=\"" << top + ph + 20
       << "\" text-anchor=\"middle\" font-size=\"11\">" << x << "</text>\n";
  for (double y : ticks(Y0, Y1, chart.log_y))
    os << "<line x1=\"" << left - 5 << "\" y1=\"" << py(y) << "\" x2=\"" << left << "\" y2=\""
       << py(y) << "\" stroke=\"black\"/><text x=\"" << left - 8 << "\" y=\"" << py(y) + 4
       << "\" text-anchor=\"end\" font-size=\"11\">" << y << "</text>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << Hh - 15
     << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(chart.xlabel) << "</text>\n";
  os << "<text transform=\"translate(18," << top + ph / 2
     << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"13\">" << escape(chart.ylabel)
     << "</text>\n";

  std::size_t legend = 0;
  auto legend_entry = [&](const std::string &label, const std::string &color, const char *dash) {
    const double ly = top + 14 + 18 * static_cast<double>(legend++);
    os << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 36
       << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"" << dash
       << "/><text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">"
       << escape(label) << "</text>\n";
  };

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const auto &s = chart.series[k];
    const std::string color = palette[k % std::size(palette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto &[x, y] : s.points)
      if ((!chart.log_x || x > 0) && (!chart.log_y || y > 0))
        os << px(x) << ',' << py(y) << ' ';
    os << "\"/>\n";
    for (const auto &[x, y] : s.points)
      if ((!chart.log_x || x > 0) && (!chart.log_y || y > 0))
        os << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    legend_entry(s.label, color, "");
  }

  for (std::size_t g = 0; g < guides.size(); ++g) {
    const double slope = chart.slope_guides[g];
    const auto &[a, b] = guides[g];
    os << "<line x1=\"" << px(a.first) << "\" y1=\"" << py(a.second) << "\" x2=\"" << px(b.first)
       << "\" y2=\"" << py(b.second) << "\" stroke=\"gray\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"/>\n";
    std::ostringstream label;
    label << "O(x^" << slope << ")";
    legend_entry(label.str(), "gray", " stroke-dasharray=\"6,4\"");
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::filesystem::path>
emit_plots(const std::vector<std::filesystem::path> &csvs, const std::filesystem::path &out_dir)
{
  std::vector<std::filesystem::path> written;
  for (const auto &path : csvs) {
    std::ifstream f(path);
    if (!f)
      throw ConfigError("cannot read " + path.string());
    const CsvData csv = read_csv(f);
    if (csv.rows.empty())
      throw ConfigError(path.string() + " has no data rows");
    const std::string stem = path.stem().string();

    std::vector<std::pair<std::string, Chart>> charts;
    if (csv.has_column("e1_recovery")) {
      const auto cr = csv.column("ratio"), cl = csv.column("l"), cH = csv.column("H");
      auto label = [&](const auto &row) { return "h/H=" + row[cr] + ", l=" + row[cl]; };
      for (const char *variant : {"galerkin", "recovery"})
        for (const char *norm : {"e1", "e0"}) {
          Chart c;
          c.title = std::string(variant) + (norm[1] == '1' ? " energy error" : " L2 error");
          c.xlabel = "H";
          c.ylabel = norm;
          c.series = aggregate(csv, label, cH, csv.column(std::string(norm) + "_" + variant));
          c.slope_guides = {norm[1] == '1' ? 1.0 : 2.0};
          charts.emplace_back(stem + "_" + variant + (norm[1] == '1' ? "_energy" : "_l2"), std::move(c));
        }
    } else if (csv.has_column("tail")) {
      const auto cc = csv.column("cell");
      Chart c;
      c.title = "basis tail energy outside N^k";
      c.xlabel = "k";
      c.ylabel = "tail energy";
      c.log_x = false;
      c.series = aggregate(csv, [&](const auto &row) { return "cell " + row[cc]; }, csv.column("k"),
                           csv.column("tail"));
      charts.emplace_back(stem + "_tail", std::move(c));
    } else if (csv.has_column("variant") && csv.has_column("e1")) {
      const bool weighted = csv.has_column("biorth");
      const auto xcol = csv.column(weighted ? "h" : "H");
      const auto gcol = csv.column(weighted ? "variant" : "ratio");
      auto label = [&](const auto &row) {
        return weighted ? "a=" + row[gcol] : "h/H=" + row[gcol];
      };
      for (const char *norm : {"e1", "e0"}) {
        Chart c;
        c.title = std::string(weighted ? "weighted recovery " : "ideal ") +
                  (norm[1] == '1' ? "energy error" : "L2 error");
        c.xlabel = weighted ? "h" : "H";
        c.ylabel = norm;
        c.series = aggregate(csv, label, xcol, csv.column(norm));
        if (!weighted)
          c.slope_guides = {norm[1] == '1' ? 1.0 : 2.0};
        charts.emplace_back(stem + (norm[1] == '1' ? "_energy" : "_l2"), std::move(c));
      }
    } else {
      throw ConfigError(path.string() + " does not match any known experiment schema");
    }

    // Render everything first so a failure leaves no partial output.
    std::vector<std::pair<std::filesystem::path, std::string>> files;
    for (const auto &[name, chart] : charts)
      files.emplace_back(out_dir / (name + ".svg"), render_svg(chart));
    std::filesystem::create_directories(out_dir);
    for (const auto &[out, svg] : files) {
      write_file(out, svg);
      written.push_back(out);
    }
  }
  return written;
}

} // namespace subhom
