// Command-line front end for the physisorbate-layer solver.
//
//   physisorb run --preset iii --out results/
//   physisorb compare-bc --preset v
//
// Exit codes: 0 success, 2 configuration error, 3 convergence failure.

#include <CLI11.hpp>

#include <iostream>

#include "physisorb/runner.hpp"

namespace {

struct CommonFlags {
  std::string preset;
  std::string config_path;
  std::string out_dir;
  std::vector<double> probes;
  std::vector<double> cuts;
  int threads = -1;
  double tol = -1.0;
  int kmax = -1;

  void attach(CLI::App* app) {
    app->add_option("--preset", preset, "named case, one of i..viii");
    app->add_option("--config", config_path, "flat key = value config file");
    app->add_option("--out", out_dir, "output directory");
    app->add_option("--probe", probes, "extra probe position (repeatable)");
    app->add_option("--cut", cuts, "velocity-cut position (repeatable)");
    app->add_option("--threads", threads, "worker threads, 0 = auto");
    app->add_option("--tol", tol, "weighted-L1 increment tolerance");
    app->add_option("--kmax", kmax, "iteration cap");
  }

  physisorb::ScenarioConfig build() const {
    physisorb::ScenarioConfig cfg;
    if (!preset.empty()) cfg = physisorb::preset_config(preset);
    if (!config_path.empty()) physisorb::apply_config_file(cfg, config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    for (double p : probes) cfg.probes.push_back(p);
    for (double c : cuts) cfg.cuts.push_back(c);
    if (threads >= 0) cfg.threads = threads;
    if (tol > 0.0) cfg.tol = tol;
    if (kmax > 0) cfg.k_max = kmax;
    physisorb::validate(cfg);
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Half-space kinetic solver for the physisorbate layer"};
  app.require_subcommand(1);

  CommonFlags run_flags, cmp_flags;
  CLI::App* run_cmd = app.add_subcommand("run", "solve a scenario and write artifacts");
  run_flags.attach(run_cmd);
  CLI::App* cmp_cmd = app.add_subcommand(
      "compare-bc", "compare boundary-condition models against the full solve");
  cmp_flags.attach(cmp_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? physisorb::kExitConfig : physisorb::kExitOk;
  }

  try {
    if (run_cmd->parsed()) {
      const auto cfg = run_flags.build();
      return physisorb::run_scenario(cfg, std::cout);
    }
    const auto cfg = cmp_flags.build();
    return physisorb::compare_bc(cfg, std::cout);
  } catch (const physisorb::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return physisorb::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
