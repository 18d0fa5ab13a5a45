// Command-line driver for the subsampled homogenization experiments.
//
//   subhom ideal     [--preset paper|desk] [--dim N] [--config F] [--manifest F]
//                    [--out DIR] [--seed S] [--threads N]
//   subhom localized ...
//   subhom decay     ...
//   subhom weighted  ...
//   subhom plot      CSV... [--out DIR]
//
// Exit code 0 on success; otherwise a single line
//   error kind=<kind> message="<text>"
// is printed to stderr.

#include <subhom/errors.hpp>
#include <subhom/experiment.hpp>
#include <subhom/plot.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

struct RunFlags
{
  std::string config;
  std::string manifest;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string preset = "desk";
  int dim = 0;
};

void
add_run_flags(CLI::App *cmd, RunFlags &f)
{
  cmd->add_option("--config", f.config, "key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--manifest", f.manifest, "rerun the configuration recorded in a manifest.json")
    ->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", f.seed, "base seed (coefficient and right-hand sides)");
  cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--preset", f.preset, "built-in parameters when no config is given")
    ->check(CLI::IsMember({"paper", "desk"}))
    ->capture_default_str();
  cmd->add_option("--dim", f.dim, "dimension for the preset")->check(CLI::Range(1, 3));
}

std::string
quote(const std::string &s)
{
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\')
      out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

int
run(subhom::ExperimentKind kind, const RunFlags &f)
{
  subhom::ExperimentConfig cfg;
  if (!f.manifest.empty()) {
    cfg = subhom::config_from_manifest(f.manifest);
  } else if (!f.config.empty()) {
    std::ifstream in(f.config);
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = subhom::ExperimentConfig::parse(ss.str());
  } else {
    cfg = subhom::preset(kind, f.preset, f.dim);
  }
  if (cfg.kind != kind)
    throw subhom::ConfigError(std::string("configuration is for '") + subhom::to_string(cfg.kind) +
                              "', not '" + subhom::to_string(kind) + "'");
  if (f.seed)
    cfg.seed = *f.seed;
  const auto csv = subhom::run_experiment(cfg, f.out, f.threads);
  std::cout << csv.string() << '\n';
  return 0;
}

} // namespace

int
main(int argc, char **argv)
{
  CLI::App app{"Subsampled numerical homogenization experiments"};
  app.require_subcommand(1);

  RunFlags flags;
  struct Cmd
  {
    const char *name;
    const char *help;
    subhom::ExperimentKind kind;
  };
  const Cmd cmds[] = {
    {"ideal", "ideal-basis error sweep over (H, h/H)", subhom::ExperimentKind::ideal_sweep},
    {"localized", "localized recovery and Galerkin sweep over (H, h/H, l)", subhom::ExperimentKind::localized_sweep},
    {"decay", "tail-energy decay of ideal basis functions", subhom::ExperimentKind::decay},
    {"weighted", "unit vs singular-weight recovery over h", subhom::ExperimentKind::weighted_sweep},
  };
  std::vector<std::pair<CLI::App *, subhom::ExperimentKind>> subs;
  for (const auto &c : cmds) {
    auto *sub = app.add_subcommand(c.name, c.help);
    add_run_flags(sub, flags);
    subs.emplace_back(sub, c.kind);
  }

  std::vector<std::string> plot_inputs;
  std::string plot_out = "plots";
  auto *plot = app.add_subcommand("plot", "render SVG charts from experiment CSVs");
  plot->add_option("csv", plot_inputs, "experiment CSV files")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out, "output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (plot->parsed()) {
      std::vector<std::filesystem::path> paths(plot_inputs.begin(), plot_inputs.end());
      for (const auto &p : subhom::emit_plots(paths, plot_out))
        std::cout << p.string() << '\n';
      return 0;
    }
    for (const auto &[sub, kind] : subs)
      if (sub->parsed())
        return run(kind, flags);
  } catch (const subhom::Error &e) {
    std::cerr << "error kind=" << e.kind() << " message=\"" << quote(e.what()) << "\"\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error kind=internal message=\"" << quote(e.what()) << "\"\n";
    return 3;
  }
  return 1;
}
