#include <subhom/errors.hpp>
#include <subhom/experiment.hpp>
#include <subhom/parallel.hpp>

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

namespace subhom {

namespace {

using Clock = std::chrono::steady_clock;

class Stage
{
public:
  Stage(StageTimings *t, std::string name)
    : t_(t)
    , name_(std::move(name))
    , start_(Clock::now())
  {}
  ~Stage()
  {
    if (t_)
      t_->emplace_back(name_, std::chrono::duration<double>(Clock::now() - start_).count());
  }

private:
  StageTimings *t_;
  std::string name_;
  Clock::time_point start_;
};

CoefficientField
make_coefficient(const ExperimentConfig &cfg, const FineGrid &grid)
{
  switch (cfg.coefficient) {
    case CoefficientKind::unit:
      return CoefficientField(grid.key(), coeff_constant(grid, 1.0).values(), "unit");
    case CoefficientKind::trig1d:
      return coeff_random_trig_1d(RandomSource(cfg.seed, 0), grid);
    case CoefficientKind::multiscale2d:
      return coeff_multiscale_2d(grid);
    default:
      throw ConfigError(std::string("coefficient '") + to_string(cfg.coefficient) +
                        "' is only available as the weight of a weighted sweep");
  }
}

FineFunction
make_rhs(const ExperimentConfig &cfg, const FineGrid &grid, int replicate)
{
  return sample_rhs_fractional(RandomSource(replicate_seed(cfg, replicate), 1), grid, cfg.delta);
}

double
max_abs(const Eigen::VectorXd &v)
{
  return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

std::string
dyadic_ratio(double h, double H)
{
  const int e = static_cast<int>(std::lround(std::log2(H / h)));
  return e == 0 ? std::string("1") : "1/" + std::to_string(1L << e);
}

template <class Row>
void
emit(std::ostream &os, const std::vector<Row> &rows, const char *header, auto &&line)
{
  const auto prec = os.precision(17);
  os << header << '\n';
  for (const auto &r : rows) {
    line(r);
    os << '\n';
  }
  os.precision(prec);
}

std::vector<std::string>
split_csv_line(const std::string &line)
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

} // namespace

std::uint64_t
replicate_seed(const ExperimentConfig &cfg, int replicate) noexcept
{
  return cfg.seed + static_cast<std::uint64_t>(replicate);
}

std::string
software_version()
{
  return "subhom 1.0.0";
}

std::vector<IdealRow>
run_ideal_sweep(const ExperimentConfig &cfg, int threads, StageTimings *timings)
{
  if (cfg.kind != ExperimentKind::ideal_sweep)
    throw ConfigError("run_ideal_sweep needs kind = ideal");
  cfg.validate();
  const FineGrid grid(cfg.dim, cfg.levels);

  std::optional<Stage> stage(std::in_place, timings, "assemble");
  const CoefficientField a = make_coefficient(cfg, grid);
  const SparseOperator A = assemble_stiffness(grid, a);
  const SparseOperator M = assemble_mass(grid);
  const Factorization F(A);
  stage.emplace(timings, "reference_solves");
  std::vector<FineFunction> truth;
  for (int r = 0; r < cfg.replicates; ++r)
    truth.push_back(solve_dirichlet(grid, F, assemble_load(grid, make_rhs(cfg, grid, r))));

  stage.emplace(timings, "sweep");
  std::vector<std::pair<int, Ratio>> pts;
  for (int e : cfg.H_exponents)
    for (const auto &ratio : cfg.ratios)
      pts.emplace_back(e, ratio);
  const auto reps = static_cast<std::size_t>(cfg.replicates);
  std::vector<IdealRow> rows(pts.size() * reps);

  parallel_for(static_cast<Index>(pts.size()), threads, [&](Index p) {
    const auto &[e, ratio] = pts[static_cast<std::size_t>(p)];
    const double H = std::ldexp(1.0, -e);
    const MeasurementSet ms(build_coarse_partition(grid, H), H * ratio.value());
    const IdealRecovery rec(grid, F, ms);
    for (std::size_t r = 0; r < reps; ++r) {
      const Eigen::VectorXd data = measure(truth[r], ms);
      const FineFunction u = rec.recover(data);
      const ErrorReport er = error_report(grid, truth[r], u, A, M);
      IdealRow &row = rows[static_cast<std::size_t>(p) * reps + r];
      row.dim = cfg.dim;
      row.levels = cfg.levels;
      row.H = H;
      row.h = ms.h();
      row.ratio = ratio.str();
      row.seed = replicate_seed(cfg, static_cast<int>(r));
      row.e1 = er.energy;
      row.e0 = er.l2;
      row.data_residual = max_abs(measure(u, ms) - data);
    }
  });
  return rows;
}

std::vector<LocalizedRow>
run_localized_sweep(const ExperimentConfig &cfg, int threads, StageTimings *timings)
{
  if (cfg.kind != ExperimentKind::localized_sweep)
    throw ConfigError("run_localized_sweep needs kind = localized");
  cfg.validate();
  const FineGrid grid(cfg.dim, cfg.levels);

  std::optional<Stage> stage(std::in_place, timings, "assemble");
  const CoefficientField a = make_coefficient(cfg, grid);
  const SparseOperator A = assemble_stiffness(grid, a);
  const SparseOperator M = assemble_mass(grid);
  const Factorization F(A);
  stage.emplace(timings, "reference_solves");
  std::vector<FineFunction> truth;
  std::vector<Eigen::VectorXd> loads;
  for (int r = 0; r < cfg.replicates; ++r) {
    loads.push_back(assemble_load(grid, make_rhs(cfg, grid, r)));
    truth.push_back(solve_dirichlet(grid, F, loads.back()));
  }

  stage.emplace(timings, "sweep");
  std::vector<LocalizedRow> rows;
  for (int e : cfg.H_exponents) {
    const double H = std::ldexp(1.0, -e);
    const CoarsePartition part = build_coarse_partition(grid, H);
    for (const auto &ratio : cfg.ratios) {
      const MeasurementSet ms(part, H * ratio.value());
      for (int l : cfg.layers) {
        const BasisSet basis = localized_basis(grid, a, part, ms, l, threads);
        const double bio = biorthogonality_residual(basis, ms);
        for (int r = 0; r < cfg.replicates; ++r) {
          const auto &u = truth[static_cast<std::size_t>(r)];
          const FineFunction urec = recover(basis, measure(u, ms));
          const FineFunction ugal = galerkin_solve(grid, basis, A, loads[static_cast<std::size_t>(r)]);
          const auto erec = error_report(grid, u, urec, A, M, SolutionVariant::recovery);
          const auto egal = error_report(grid, u, ugal, A, M, SolutionVariant::galerkin);
          LocalizedRow row;
          row.dim = cfg.dim;
          row.levels = cfg.levels;
          row.H = H;
          row.h = ms.h();
          row.ratio = ratio.str();
          row.layer = l;
          row.seed = replicate_seed(cfg, r);
          row.e1_recovery = erec.energy;
          row.e0_recovery = erec.l2;
          row.e1_galerkin = egal.energy;
          row.e0_galerkin = egal.l2;
          row.biorth = bio;
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

std::vector<DecayRow>
run_decay(const ExperimentConfig &cfg, int threads, StageTimings *timings)
{
  if (cfg.kind != ExperimentKind::decay)
    throw ConfigError("run_decay needs kind = decay");
  cfg.validate();
  const FineGrid grid(cfg.dim, cfg.levels);

  std::optional<Stage> stage(std::in_place, timings, "assemble");
  const CoefficientField a = make_coefficient(cfg, grid);
  const SparseOperator A = assemble_stiffness(grid, a);
  const Factorization F(A);
  const auto [H, h] = cfg.points().front();
  const CoarsePartition part = build_coarse_partition(grid, H);
  const MeasurementSet ms(part, h);

  stage.emplace(timings, "ideal_basis");
  const BasisSet basis = ideal_basis(grid, A, F, ms, threads);

  stage.emplace(timings, "profiles");
  std::vector<Index> cells = cfg.cells;
  if (cells.empty())
    cells.push_back(center_cell(part));
  std::vector<DecayRow> rows;
  for (Index c : cells) {
    if (c < 0 || c >= part.cell_count())
      throw ConfigError("decay cell " + std::to_string(c) + " out of range");
    const DecayProfile prof = decay_profile(grid, basis, c, part, A);
    const double ratio = prof.fitted_ratio(cfg.fit_max_k);
    for (std::size_t k = 0; k < prof.tail.size(); ++k)
      rows.push_back({c, static_cast<int>(k), prof.tail[k], prof.total, ratio});
  }
  return rows;
}

std::vector<WeightedRow>
run_weighted_sweep(const ExperimentConfig &cfg, int threads, StageTimings *timings)
{
  if (cfg.kind != ExperimentKind::weighted_sweep)
    throw ConfigError("run_weighted_sweep needs kind = weighted");
  cfg.validate();
  const FineGrid grid(cfg.dim, cfg.levels);
  const double H = std::ldexp(1.0, -cfg.H_exponents.front());
  const CoarsePartition part = build_coarse_partition(grid, H);

  std::optional<Stage> stage(std::in_place, timings, "assemble");
  const CoefficientField W = cfg.weight == CoefficientKind::weight_log ? weight_log_singular(part)
                                                                       : weight_power(part, cfg.gamma);
  const CoefficientField one(grid.key(), coeff_constant(grid, 1.0).values(), "unit");
  const SparseOperator AW = assemble_stiffness(grid, W);
  const SparseOperator A1 = assemble_stiffness(grid, one);
  const SparseOperator M = assemble_mass(grid);
  const Factorization FW(AW);
  const Factorization F1(A1);

  stage.emplace(timings, "reference_solves");
  std::vector<FineFunction> truth;
  for (int r = 0; r < cfg.replicates; ++r)
    truth.push_back(solve_dirichlet(grid, FW, assemble_load(grid, make_rhs(cfg, grid, r))));

  stage.emplace(timings, "sweep");
  std::vector<WeightedRow> rows;
  for (const auto &[Hp, h] : cfg.points()) {
    const MeasurementSet ms(part, h);
    const BasisSet b1 = ideal_basis(grid, A1, F1, ms, threads);
    const BasisSet bW = ideal_basis(grid, AW, FW, ms, threads);
    const double bio1 = biorthogonality_residual(b1, ms);
    const double bioW = biorthogonality_residual(bW, ms);
    for (int r = 0; r < cfg.replicates; ++r) {
      const auto &u = truth[static_cast<std::size_t>(r)];
      const Eigen::VectorXd data = measure(u, ms);
      for (int v = 0; v < 2; ++v) {
        const FineFunction rec = recover(v == 0 ? b1 : bW, data);
        // Errors in the unweighted H^1_0 seminorm and L2 for both variants.
        const ErrorReport er = error_report(grid, u, rec, A1, M);
        WeightedRow row;
        row.dim = cfg.dim;
        row.levels = cfg.levels;
        row.H = Hp;
        row.h = ms.h();
        row.variant = v == 0 ? "unit" : "weighted";
        row.seed = replicate_seed(cfg, r);
        row.e1 = er.energy;
        row.e0 = er.l2;
        row.biorth = v == 0 ? bio1 : bioW;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void
write_csv(std::ostream &os, const std::vector<IdealRow> &rows)
{
  emit(os, rows, "d,levels,H,h,ratio,l,variant,e1,e0,seed,data_residual", [&](const IdealRow &r) {
    os << r.dim << ',' << r.levels << ',' << r.H << ',' << r.h << ',' << r.ratio << ",inf,ideal,"
       << r.e1 << ',' << r.e0 << ',' << r.seed << ',' << r.data_residual;
  });
}

void
write_csv(std::ostream &os, const std::vector<LocalizedRow> &rows)
{
  emit(os, rows,
       "d,levels,H,h,ratio,l,seed,e1_recovery,e0_recovery,e1_galerkin,e0_galerkin,biorth",
       [&](const LocalizedRow &r) {
         os << r.dim << ',' << r.levels << ',' << r.H << ',' << r.h << ',' << r.ratio << ','
            << r.layer << ',' << r.seed << ',' << r.e1_recovery << ',' << r.e0_recovery << ','
            << r.e1_galerkin << ',' << r.e0_galerkin << ',' << r.biorth;
       });
}

void
write_csv(std::ostream &os, const std::vector<DecayRow> &rows)
{
  emit(os, rows, "cell,k,tail,total,fitted_ratio", [&](const DecayRow &r) {
    os << r.cell << ',' << r.k << ',' << r.tail << ',' << r.total << ',' << r.fitted_ratio;
  });
}

void
write_csv(std::ostream &os, const std::vector<WeightedRow> &rows)
{
  emit(os, rows, "d,levels,H,h,ratio,l,variant,e1,e0,seed,biorth", [&](const WeightedRow &r) {
    os << r.dim << ',' << r.levels << ',' << r.H << ',' << r.h << ',' << dyadic_ratio(r.h, r.H)
       << ",inf," << r.variant << ',' << r.e1 << ',' << r.e0 << ',' << r.seed << ',' << r.biorth;
  });
}

std::filesystem::path
run_experiment(const ExperimentConfig &cfg, const std::filesystem::path &out_dir, int threads)
{
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  const auto csv_path = out_dir / (std::string(to_string(cfg.kind)) + ".csv");

  StageTimings timings;
  std::ostringstream csv;
  switch (cfg.kind) {
    case ExperimentKind::ideal_sweep:
      write_csv(csv, run_ideal_sweep(cfg, threads, &timings));
      break;
    case ExperimentKind::localized_sweep:
      write_csv(csv, run_localized_sweep(cfg, threads, &timings));
      break;
    case ExperimentKind::decay:
      write_csv(csv, run_decay(cfg, threads, &timings));
      break;
    case ExperimentKind::weighted_sweep:
      write_csv(csv, run_weighted_sweep(cfg, threads, &timings));
      break;
  }
  {
    std::ofstream f(csv_path, std::ios::binary);
    if (!f)
      throw Error("io", "cannot write " + csv_path.string());
    f << csv.str();
  }

  nlohmann::json m;
  m["software"] = software_version();
  m["command"] = to_string(cfg.kind);
  m["config"] = cfg.to_map();
  m["threads"] = threads;
  std::vector<std::uint64_t> seeds;
  for (int r = 0; r < cfg.replicates; ++r)
    seeds.push_back(replicate_seed(cfg, r));
  m["rhs_seeds"] = seeds;
  m["coefficient_seed"] = cfg.seed;
  nlohmann::json stages = nlohmann::json::array();
  for (const auto &[name, secs] : timings)
    stages.push_back({{"stage", name}, {"seconds", secs}});
  m["timings"] = stages;
  m["csv"] = csv_path.filename().string();
  std::ofstream mf(out_dir / "manifest.json");
  mf << m.dump(2) << '\n';
  return csv_path;
}

ExperimentConfig
config_from_manifest(const std::filesystem::path &manifest)
{
  std::ifstream f(manifest);
  if (!f)
    throw ConfigError("cannot read manifest " + manifest.string());
  nlohmann::json m;
  try {
    f >> m;
    return ExperimentConfig::from_map(m.at("config").get<std::map<std::string, std::string>>());
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError("malformed manifest " + manifest.string() + ": " + e.what());
  }
}

void
revalidate_csv(std::istream &is)
{
  std::string line;
  if (!std::getline(is, line))
    throw ConfigError("empty CSV");
  const auto header = split_csv_line(line);
  auto col = [&](const std::string &name) {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name)
        return k;
    throw ConfigError("CSV has no column '" + name + "'");
  };
  const auto cd = col("d"), cl = col("levels"), cH = col("H"), ch = col("h");
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty())
      continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ConfigError("CSV line " + std::to_string(lineno) + " has the wrong number of fields");
    try {
      const FineGrid grid(std::stoi(cells[cd]), std::stoi(cells[cl]));
      const auto part = build_coarse_partition(grid, std::stod(cells[cH]));
      (void)build_measurement_set(part, std::stod(cells[ch]));
    } catch (const Error &e) {
      throw AlignmentError("CSV line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::logic_error &) {
      throw ConfigError("CSV line " + std::to_string(lineno) + " has non-numeric geometry");
    }
  }
}

} // namespace subhom
