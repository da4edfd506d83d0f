#pragma once

// Scenario-driven front end shared by the CLI and the tests: runs a solve,
// writes the artifact set, and compares the boundary-condition models.

#include <iosfwd>
#include <string>

#include "physisorb/bc.hpp"
#include "physisorb/scenario.hpp"

namespace physisorb {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNoConvergence = 3;

// Writes moments.csv, increments.csv, report.json, cuts/*.csv and bc/*.csv
// under cfg.out_dir.  Returns kExitOk or kExitNoConvergence (partial
// artifacts are still written); ConfigError propagates to the caller.
int run_scenario(const ScenarioConfig& cfg, std::ostream& log);

struct BcDistances {
  double linf_first = 0.0, l1_first = 0.0;
  double linf_second = 0.0, l1_second = 0.0;
  double rel_linf_first = 0.0, rel_linf_second = 0.0;
  double rel_l1_first = 0.0, rel_l1_second = 0.0;
};

// L-infinity and L1 distances of the model outgoing distributions from the
// full solve over c_z in [0.1, 3].
BcDistances compare_bc_distances(const ScenarioResult& full,
                                 const ShiftedMaxwellian& input, int threads);

int compare_bc(const ScenarioConfig& cfg, std::ostream& out);

}  // namespace physisorb
