#include <subhom/config.hpp>
#include <subhom/errors.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace subhom {

namespace {

std::string
trim(const std::string &s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string>
split_list(const std::string &s)
{
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (auto t = trim(item); !t.empty())
      out.push_back(t);
  return out;
}

long
parse_long(const std::string &key, const std::string &s)
{
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size())
      throw ConfigError("");
    return v;
  } catch (...) {
    throw ConfigError("key '" + key + "': '" + s + "' is not an integer");
  }
}

double
parse_double(const std::string &key, const std::string &s)
{
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size())
      throw ConfigError("");
    return v;
  } catch (...) {
    throw ConfigError("key '" + key + "': '" + s + "' is not a number");
  }
}

std::uint64_t
parse_u64(const std::string &key, const std::string &s)
{
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos != s.size() || s.front() == '-')
      throw ConfigError("");
    return v;
  } catch (...) {
    throw ConfigError("key '" + key + "': '" + s + "' is not an unsigned integer");
  }
}

template <class T, class F>
std::string
join(const std::vector<T> &v, F &&fmt)
{
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k)
      out += ", ";
    out += fmt(v[k]);
  }
  return out;
}

std::string
format_double(double v)
{
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<int>
range(int a, int b)
{
  std::vector<int> v;
  for (int k = a; k <= b; ++k)
    v.push_back(k);
  return v;
}

std::vector<Ratio>
ratios(std::initializer_list<const char *> r)
{
  std::vector<Ratio> out;
  for (const char *s : r)
    out.push_back(Ratio::parse(s));
  return out;
}

} // namespace

const char *
to_string(ExperimentKind k) noexcept
{
  switch (k) {
    case ExperimentKind::ideal_sweep:
      return "ideal";
    case ExperimentKind::localized_sweep:
      return "localized";
    case ExperimentKind::decay:
      return "decay";
    case ExperimentKind::weighted_sweep:
      return "weighted";
  }
  return "?";
}

const char *
to_string(CoefficientKind k) noexcept
{
  switch (k) {
    case CoefficientKind::unit:
      return "unit";
    case CoefficientKind::trig1d:
      return "trig1d";
    case CoefficientKind::multiscale2d:
      return "multiscale2d";
    case CoefficientKind::weight_log:
      return "weight_log";
    case CoefficientKind::weight_power:
      return "weight_power";
  }
  return "?";
}

ExperimentKind
parse_experiment_kind(const std::string &s)
{
  for (auto k : {ExperimentKind::ideal_sweep, ExperimentKind::localized_sweep,
                 ExperimentKind::decay, ExperimentKind::weighted_sweep})
    if (s == to_string(k))
      return k;
  throw ConfigError("unknown experiment kind '" + s + "'");
}

CoefficientKind
parse_coefficient_kind(const std::string &s)
{
  for (auto k : {CoefficientKind::unit, CoefficientKind::trig1d, CoefficientKind::multiscale2d,
                 CoefficientKind::weight_log, CoefficientKind::weight_power})
    if (s == to_string(k))
      return k;
  throw ConfigError("unknown coefficient kind '" + s + "'");
}

std::string
Ratio::str() const
{
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

Ratio
Ratio::parse(const std::string &s)
{
  const auto t = trim(s);
  const auto slash = t.find('/');
  Ratio r;
  r.num = parse_long("ratio", trim(t.substr(0, slash)));
  r.den = slash == std::string::npos ? 1 : parse_long("ratio", trim(t.substr(slash + 1)));
  if (r.num <= 0 || r.den <= 0 || r.num > r.den)
    throw ConfigError("ratio '" + s + "' must lie in (0, 1]");
  const long g = std::gcd(r.num, r.den);
  r.num /= g;
  r.den /= g;
  return r;
}

std::vector<std::pair<double, double>>
ExperimentConfig::points() const
{
  std::vector<std::pair<double, double>> out;
  if (kind == ExperimentKind::weighted_sweep) {
    const double H = std::ldexp(1.0, -H_exponents.at(0));
    for (int e : h_exponents)
      out.emplace_back(H, std::ldexp(1.0, -e));
    return out;
  }
  if (kind == ExperimentKind::decay) {
    const double H = std::ldexp(1.0, -H_exponents.at(0));
    out.emplace_back(H, H * ratios.at(0).value());
    return out;
  }
  for (int e : H_exponents) {
    const double H = std::ldexp(1.0, -e);
    for (const auto &r : ratios)
      out.emplace_back(H, H * r.value());
  }
  return out;
}

void
ExperimentConfig::validate() const
{
  if (dim < 1 || dim > 3)
    throw ConfigError("dim must be 1, 2 or 3");
  if (replicates < 1)
    throw ConfigError("replicates must be >= 1");
  if (H_exponents.empty())
    throw ConfigError("H_exponents must not be empty");
  if (!(delta > 0.0))
    throw ConfigError("delta must be positive");
  switch (kind) {
    case ExperimentKind::ideal_sweep:
      if (ratios.empty())
        throw ConfigError("ratios must not be empty");
      break;
    case ExperimentKind::localized_sweep:
      if (ratios.empty() || layers.empty())
        throw ConfigError("localized sweep needs ratios and layers");
      for (int l : layers)
        if (l < 0)
          throw ConfigError("layers must be nonnegative");
      break;
    case ExperimentKind::decay:
      if (ratios.empty())
        throw ConfigError("decay needs one ratio");
      break;
    case ExperimentKind::weighted_sweep:
      if (dim < 2)
        throw ConfigError("weighted sweep requires dim >= 2");
      if (h_exponents.empty())
        throw ConfigError("weighted sweep needs h_exponents");
      if (!(gamma > 0.0))
        throw ConfigError("gamma must be positive");
      if (weight != CoefficientKind::weight_power && weight != CoefficientKind::weight_log)
        throw ConfigError("weight must be weight_power or weight_log");
      break;
  }
  if (dim == 1 && coefficient == CoefficientKind::multiscale2d)
    throw ConfigError("coefficient multiscale2d requires dim = 2");
  if (dim != 1 && coefficient == CoefficientKind::trig1d)
    throw ConfigError("coefficient trig1d requires dim = 1");

  const FineGrid grid(dim, levels);
  for (const auto &[H, h] : points()) {
    try {
      const auto part = build_coarse_partition(grid, H);
      (void)build_measurement_set(part, h);
    } catch (const Error &e) {
      std::ostringstream os;
      os << "configuration point (H=" << format_double(H) << ", h=" << format_double(h)
         << ", levels=" << levels << "): " << e.what();
      throw AlignmentError(os.str());
    }
  }
}

std::map<std::string, std::string>
ExperimentConfig::to_map() const
{
  auto ints = [](int v) { return std::to_string(v); };
  std::map<std::string, std::string> kv;
  kv["kind"] = to_string(kind);
  kv["dim"] = std::to_string(dim);
  kv["levels"] = std::to_string(levels);
  kv["H_exponents"] = join(H_exponents, ints);
  kv["ratios"] = join(ratios, [](const Ratio &r) { return r.str(); });
  kv["h_exponents"] = join(h_exponents, ints);
  kv["layers"] = join(layers, ints);
  kv["coefficient"] = to_string(coefficient);
  kv["seed"] = std::to_string(seed);
  kv["replicates"] = std::to_string(replicates);
  kv["delta"] = format_double(delta);
  kv["gamma"] = format_double(gamma);
  kv["weight"] = to_string(weight);
  kv["cells"] = join(cells, [](Index c) { return std::to_string(c); });
  kv["fit_max_k"] = std::to_string(fit_max_k);
  return kv;
}

std::string
ExperimentConfig::to_text() const
{
  std::string out;
  for (const auto &[k, v] : to_map())
    out += k + " = " + v + "\n";
  return out;
}

ExperimentConfig
ExperimentConfig::from_map(const std::map<std::string, std::string> &kv)
{
  ExperimentConfig c;
  if (auto it = kv.find("kind"); it != kv.end())
    c = preset(parse_experiment_kind(it->second), "desk",
               kv.count("dim") ? static_cast<int>(parse_long("dim", kv.at("dim"))) : 0);
  for (const auto &[key, value] : kv) {
    if (key == "kind")
      continue;
    else if (key == "dim")
      c.dim = static_cast<int>(parse_long(key, value));
    else if (key == "levels")
      c.levels = static_cast<int>(parse_long(key, value));
    else if (key == "H_exponents" || key == "h_exponents" || key == "layers") {
      std::vector<int> v;
      for (const auto &s : split_list(value))
        v.push_back(static_cast<int>(parse_long(key, s)));
      (key == "H_exponents" ? c.H_exponents : key == "h_exponents" ? c.h_exponents : c.layers) = v;
    } else if (key == "ratios") {
      c.ratios.clear();
      for (const auto &s : split_list(value))
        c.ratios.push_back(Ratio::parse(s));
    } else if (key == "coefficient")
      c.coefficient = parse_coefficient_kind(value);
    else if (key == "seed")
      c.seed = parse_u64(key, value);
    else if (key == "replicates")
      c.replicates = static_cast<int>(parse_long(key, value));
    else if (key == "delta")
      c.delta = parse_double(key, value);
    else if (key == "gamma")
      c.gamma = parse_double(key, value);
    else if (key == "weight")
      c.weight = parse_coefficient_kind(value);
    else if (key == "cells") {
      c.cells.clear();
      for (const auto &s : split_list(value))
        c.cells.push_back(parse_long(key, s));
    } else if (key == "fit_max_k")
      c.fit_max_k = static_cast<int>(parse_long(key, value));
    else
      throw ConfigError("unknown key '" + key + "'");
  }
  return c;
}

ExperimentConfig
ExperimentConfig::parse(const std::string &text)
{
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    if (kv.count(key))
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv[key] = trim(line.substr(eq + 1));
  }
  if (!kv.count("kind"))
    throw ConfigError("configuration has no 'kind' key");
  return from_map(kv);
}

ExperimentConfig
preset(ExperimentKind kind, const std::string &name, int dim)
{
  if (name != "paper" && name != "desk")
    throw ConfigError("unknown preset '" + name + "' (expected paper or desk)");
  const bool paper = name == "paper";
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case ExperimentKind::ideal_sweep:
      c.dim = dim == 0 ? 1 : dim;
      if (c.dim == 1) {
        c.levels = paper ? 11 : 10;
        c.H_exponents = paper ? range(2, 7) : range(2, 6);
        c.ratios = ratios({"1", "1/2", "1/4", "1/8"});
        c.coefficient = CoefficientKind::trig1d;
        c.replicates = paper ? 1 : 5;
      } else {
        // ratios 3/4 and 1/4 at H = 2^-6 need a 2^-9 grid
        c.levels = paper ? 9 : 7;
        c.H_exponents = paper ? range(2, 6) : range(2, 4);
        c.ratios = ratios({"1", "3/4", "1/2", "1/4"});
        c.coefficient = CoefficientKind::multiscale2d;
      }
      break;
    case ExperimentKind::localized_sweep:
      c.dim = dim == 0 ? 1 : dim;
      if (c.dim == 1) {
        c.levels = paper ? 11 : 10;
        c.H_exponents = paper ? range(2, 7) : range(2, 6);
        c.ratios = ratios({"1", "1/2", "1/4", "1/8"});
        c.coefficient = CoefficientKind::trig1d;
      } else {
        // H = 2^-8 with ratio 3/4 or 1/4 would need levels 11, over the node budget
        c.levels = paper ? 10 : 7;
        c.H_exponents = paper ? range(2, 7) : range(2, 4);
        c.ratios = ratios({"1", "3/4", "1/2", "1/4"});
        c.coefficient = CoefficientKind::multiscale2d;
      }
      c.layers = paper ? std::vector<int>{2, 4} : std::vector<int>{2};
      break;
    case ExperimentKind::decay:
      c.dim = dim == 0 ? 2 : dim;
      c.levels = paper ? 8 : 7;
      c.H_exponents = {3};
      c.ratios = ratios({"1/2"});
      c.coefficient = c.dim == 1 ? CoefficientKind::trig1d : CoefficientKind::multiscale2d;
      c.fit_max_k = 4;
      break;
    case ExperimentKind::weighted_sweep:
      c.dim = dim == 0 ? 2 : dim;
      c.levels = paper ? 8 : 7;
      c.H_exponents = {2};
      c.h_exponents = paper ? range(3, 7) : range(3, 6);
      c.coefficient = CoefficientKind::unit;
      c.weight = CoefficientKind::weight_power;
      c.gamma = 1.0;
      break;
  }
  return c;
}

Index
center_cell(const CoarsePartition &p)
{
  Multi c{0, 0, 0};
  for (int k = 0; k < p.dim(); ++k)
    c[k] = (p.cells_per_side() - 1) / 2;
  return p.cell_index(c);
}

} // namespace subhom
