#include <doctest.h>

#include <subhom/errors.hpp>
#include <subhom/experiment.hpp>
#include <subhom/plot.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

using namespace subhom;
namespace fs = std::filesystem;

namespace {

fs::path
scratch(const std::string &name)
{
  const fs::path p = fs::temp_directory_path() / ("subhom_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string
slurp(const fs::path &p)
{
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ExperimentConfig
small_ideal()
{
  return ExperimentConfig::parse("kind = ideal\n"
                                 "dim = 1\n"
                                 "levels = 7\n"
                                 "H_exponents = 2, 3\n"
                                 "ratios = 1, 1/2\n"
                                 "coefficient = trig1d\n"
                                 "seed = 3\n"
                                 "replicates = 2\n");
}

int
run_cli(const std::string &args, const fs::path &err)
{
  const std::string cmd = std::string(SUBHOM_CLI_PATH) + " " + args + " > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("ratio parsing")
{
  CHECK(Ratio::parse("3/4") == Ratio{3, 4});
  CHECK(Ratio::parse("1") == Ratio{1, 1});
  CHECK(Ratio::parse("1/8").value() == 0.125);
  CHECK(Ratio{1, 2}.str() == "1/2");
  CHECK_THROWS_AS(Ratio::parse("x"), ConfigError);
  CHECK_THROWS_AS(Ratio::parse("3/0"), ConfigError);
}

TEST_CASE("config text round trip")
{
  const auto cfg = small_ideal();
  CHECK(cfg.kind == ExperimentKind::ideal_sweep);
  CHECK(cfg.H_exponents == std::vector<int>{2, 3});
  CHECK(cfg.ratios.size() == 2);
  CHECK(cfg.replicates == 2);
  const auto back = ExperimentConfig::parse(cfg.to_text());
  CHECK(back.to_map() == cfg.to_map());
  CHECK(cfg.points().size() == 4);

  CHECK_THROWS_AS(ExperimentConfig::parse("kind = ideal\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("kind = nothing\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("kind = ideal\nlevels = many\n"), ConfigError);
}

TEST_CASE("config validation")
{
  auto cfg = small_ideal();
  cfg.ratios = {Ratio{3, 4}};
  cfg.H_exponents = {6};
  // 3/4 at H = 2^-6 needs an offset of 2^-9 on a 2^-7 grid
  CHECK_THROWS_AS(cfg.validate(), AlignmentError);
  cfg = small_ideal();
  cfg.replicates = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_ideal();
  cfg.coefficient = CoefficientKind::multiscale2d;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("presets")
{
  const auto p1 = preset(ExperimentKind::ideal_sweep, "paper", 1);
  CHECK(p1.levels == 11);
  CHECK(p1.points().size() == 24);
  CHECK_NOTHROW(p1.validate());
  const auto p2 = preset(ExperimentKind::ideal_sweep, "paper", 2);
  CHECK(p2.levels == 9);
  CHECK(p2.H_exponents.back() == 6);
  CHECK_NOTHROW(p2.validate());
  const auto l2 = preset(ExperimentKind::localized_sweep, "paper", 2);
  CHECK(l2.levels == 10);
  const auto loc1 = preset(ExperimentKind::localized_sweep, "paper", 1);
  CHECK(loc1.H_exponents.size() * loc1.ratios.size() == 24);
  for (auto kind : {ExperimentKind::ideal_sweep, ExperimentKind::localized_sweep, ExperimentKind::decay,
                    ExperimentKind::weighted_sweep})
    for (int d : {0, 1, 2})
      for (const char *name : {"paper", "desk"}) {
        if (kind == ExperimentKind::weighted_sweep && d == 1)
          continue;
        CAPTURE(d);
        CHECK_NOTHROW(preset(kind, name, d).validate());
      }
  const auto w = preset(ExperimentKind::weighted_sweep, "paper", 2);
  CHECK(w.h_exponents.size() == 5);
  CHECK_THROWS_AS(preset(ExperimentKind::decay, "huge", 2), ConfigError);
}

TEST_CASE("singleton sweep has one row")
{
  auto cfg = small_ideal();
  cfg.H_exponents = {2};
  cfg.ratios = {Ratio{1, 2}};
  cfg.replicates = 1;
  const auto rows = run_ideal_sweep(cfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].H == 0.25);
  CHECK(rows[0].h == 0.125);
  CHECK(rows[0].data_residual < 1e-10);
  CHECK(rows[0].e1 > 0.0);
}

TEST_CASE("sweeps are deterministic")
{
  const auto cfg = small_ideal();
  std::ostringstream a, b;
  write_csv(a, run_ideal_sweep(cfg));
  write_csv(b, run_ideal_sweep(cfg, 3));
  CHECK(a.str() == b.str());
  const std::string text = a.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 4 * 2);
  CHECK(replicate_seed(cfg, 1) == 4);
}

TEST_CASE("saturated localized sweep matches the ideal sweep")
{
  auto ideal = small_ideal();
  ideal.replicates = 1;
  auto loc = ideal;
  loc.kind = ExperimentKind::localized_sweep;
  loc.layers = {8};
  const auto ri = run_ideal_sweep(ideal);
  const auto rl = run_localized_sweep(loc);
  REQUIRE(ri.size() == rl.size());
  for (std::size_t k = 0; k < ri.size(); ++k) {
    CHECK(rl[k].e1_recovery == doctest::Approx(ri[k].e1).epsilon(1e-6));
    CHECK(rl[k].e0_recovery == doctest::Approx(ri[k].e0).epsilon(1e-6));
    CHECK(rl[k].e1_galerkin <= rl[k].e1_recovery + 1e-8);
    CHECK(rl[k].biorth <= 1e-8);
  }
}

TEST_CASE("weighted sweep rows")
{
  auto cfg = preset(ExperimentKind::weighted_sweep, "desk", 2);
  cfg.levels = 6;
  cfg.h_exponents = {3, 4, 5};
  const auto rows = run_weighted_sweep(cfg);
  REQUIRE(rows.size() == 6);
  for (const auto &r : rows)
    CHECK(r.biorth <= 1e-8);
  CHECK(rows[0].variant == "unit");
  CHECK(rows[1].variant == "weighted");
}

TEST_CASE("decay rows")
{
  auto cfg = preset(ExperimentKind::decay, "desk", 2);
  cfg.levels = 5;
  const auto rows = run_decay(cfg);
  REQUIRE(!rows.empty());
  CHECK(rows.back().tail == 0.0);
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (rows[k].cell == rows[k - 1].cell)
      CHECK(rows[k].tail <= rows[k - 1].tail);
  CHECK(rows[0].fitted_ratio < 1.0);
}

TEST_CASE("experiment output, manifest round trip and revalidation")
{
  const auto dir = scratch("manifest");
  const auto cfg = small_ideal();
  const auto csv = run_experiment(cfg, dir / "a");
  CHECK(csv.filename() == "ideal.csv");
  REQUIRE(fs::exists(dir / "a" / "manifest.json"));
  const auto again = config_from_manifest(dir / "a" / "manifest.json");
  CHECK(again.to_map() == cfg.to_map());
  run_experiment(again, dir / "b");
  CHECK(slurp(dir / "a" / "ideal.csv") == slurp(dir / "b" / "ideal.csv"));

  std::ifstream in(csv);
  CHECK_NOTHROW(revalidate_csv(in));
  std::istringstream bad("d,levels,H,h\n1,7,0.25,0.1\n");
  CHECK_THROWS_AS(revalidate_csv(bad), AlignmentError);
  std::istringstream empty("");
  CHECK_THROWS_AS(revalidate_csv(empty), ConfigError);
}

TEST_CASE("slope guides")
{
  for (double s : {1.0, 2.0}) {
    const auto [p, q] = slope_guide(1.0 / 64, 0.25, 0.3, s);
    const double slope = (std::log(q.second) - std::log(p.second)) / (std::log(q.first) - std::log(p.first));
    CHECK(slope == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("plots")
{
  const auto dir = scratch("plots");
  auto cfg = small_ideal();
  const auto csv = run_experiment(cfg, dir);
  const auto files = emit_plots({csv}, dir / "svg");
  CHECK(files.size() == 2);
  for (const auto &f : files) {
    CHECK(f.extension() == ".svg");
    CHECK(slurp(f).find("<svg") != std::string::npos);
  }

  std::ofstream(dir / "empty.csv") << "";
  CHECK_THROWS(emit_plots({dir / "empty.csv"}, dir / "none"));
  const bool wrote = fs::exists(dir / "none") && !fs::is_empty(dir / "none");
  CHECK_FALSE(wrote);

  const auto header_only = dir / "header.csv";
  std::ofstream(header_only) << "d,levels,H,h,ratio,l,variant,e1,e0,seed,data_residual\n";
  CHECK_THROWS(emit_plots({header_only}, dir / "none2"));
}

TEST_CASE("cli reports errors on one line")
{
  const auto dir = scratch("cli");
  const auto cfg = dir / "bad.cfg";
  std::ofstream(cfg) << "kind = ideal\ndim = 1\nlevels = 4\nH_exponents = 2\nratios = 3/4\n";
  const int code = run_cli("ideal --config " + cfg.string() + " --out " + (dir / "o").string(), dir / "err.txt");
  CHECK(code == 2);
  const std::string err = slurp(dir / "err.txt");
  CHECK(std::regex_match(err, std::regex("error kind=alignment message=\".*\"\n")));

  const auto cfg2 = dir / "mismatch.cfg";
  std::ofstream(cfg2) << "kind = decay\ndim = 2\nlevels = 4\nH_exponents = 2\nratios = 1/2\ncoefficient = multiscale2d\n";
  CHECK(run_cli("ideal --config " + cfg2.string(), dir / "err2.txt") == 2);
  CHECK(slurp(dir / "err2.txt").rfind("error kind=config", 0) == 0);

  CHECK(run_cli("ideal --preset desk --dim 1 --out " + (dir / "ok").string(), dir / "err3.txt") == 0);
  CHECK(fs::exists(dir / "ok" / "ideal.csv"));
}
