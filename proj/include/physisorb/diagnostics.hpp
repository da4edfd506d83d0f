#pragma once

// Property oracles for the small-grid identity checks and the restart
// uniqueness test.  Kernel identities run on tiny grids (the kernel path is
// O(N^2)); they gate correctness of the sweep, not per-run health.

#include <string>
#include <vector>

#include "physisorb/solver.hpp"

namespace physisorb::diagnostics {

enum class Status { Pass, Fail, Skipped };

struct PropertyOutcome {
  std::string name;
  Status status = Status::Pass;
  double measured = 0.0;
  double threshold = 0.0;
  std::string reason;  // populated for Skipped
};

// Quadrature verification of the kernel identities: row integrals of K-+,
// the combined mu-weighted zeta integral including the trapped-energy value
// 2 mu(s, eps), and pointwise nonnegativity at random admissible triples.
std::vector<PropertyOutcome> check_kernel_identities(const Potential& p,
                                                     const RelaxationModel& r,
                                                     int n_eps = 16, int n_zeta = 16);

// Closed-form turning values are averages of n M over the orbit: the weights
// integrate to one and the values sit inside [min, max] of the source.
PropertyOutcome check_turning_averages(const OpticalDepthTable& table,
                                       const Eigen::ArrayXd& n_profile,
                                       const std::vector<int>& trapped_rows);

// Lower bound theta(zeta_a, inf; eps) >= e^{-K/sqrt(eps)} on every free row.
PropertyOutcome check_attenuation_lower_bound(const OpticalDepthTable& table);

// Solves from the zero and the equilibrium-scaled initial guesses (both at
// a tightened tolerance) and reports the max relative density difference;
// Pass when it stays within 10x the scenario tolerance.
PropertyOutcome uniqueness_restart(std::shared_ptr<const OpticalDepthTable> table,
                                   const ShiftedMaxwellian& input,
                                   const SolverParams& params);

}  // namespace physisorb::diagnostics
