#pragma once

// Scenario configuration: embedded presets (i)-(viii), a flat key = value
// config format (TOML-compatible subset), and assembly into solver inputs.

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "physisorb/solver.hpp"

namespace physisorb {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error("config error: " + key + ": " + what), key(key) {}
  std::string key;
};

struct ScenarioConfig {
  std::string preset;  // "", or one of i..viii

  PotentialKind potential = PotentialKind::LJ9_3;
  double kappa = 1.0;
  RelaxationKind relaxation = RelaxationKind::Algebraic;
  double kappa_tau = 1.0;
  double sigma = 1.0;
  double nu = 4.0;

  double t_inf = 1.0;
  double vz_inf = 0.0;

  int n_eps = 384;
  int n_zeta = 1024;
  double eps_max = 12.0;
  double zeta_max = 50.0;
  double zeta_far = 1e4;
  int n_tail = 48;

  double tol = 1e-10;
  int k_max = 2000;
  int k_min_fit = 50;
  int threads = 0;
  double discretization_tol = 1e-3;

  std::string out_dir = "out";
  std::vector<double> probes;  // extra probe positions
  std::vector<double> cuts;    // velocity-cut positions
};

// Table-1 preset names: "i".."viii".  Throws ConfigError for unknown names.
ScenarioConfig preset_config(const std::string& name);
const std::vector<std::string>& preset_names();

// Overlays `key = value` lines onto a config; unknown keys throw ConfigError.
void apply_config_file(ScenarioConfig& cfg, const std::string& path);
void apply_config_line(ScenarioConfig& cfg, const std::string& key,
                       const std::string& value);

void validate(const ScenarioConfig& cfg);

struct AssembledScenario {
  Potential pot;
  RelaxationModel relax;
  std::shared_ptr<const OpticalDepthTable> table;
  ShiftedMaxwellian input;
  SolverParams params;
};

AssembledScenario assemble(const ScenarioConfig& cfg);

}  // namespace physisorb
