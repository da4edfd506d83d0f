#pragma once

// Fixed-point source iteration with convergence diagnostics.

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "physisorb/input.hpp"
#include "physisorb/transport.hpp"

namespace physisorb {

struct SolverParams {
  double tol = 1e-10;  // weighted-L1 increment threshold
  int k_max = 2000;
  int k_min_fit = 50;  // first iteration used by the rate fit
  int threads = 0;     // 0 = hardware concurrency
  bool start_from_equilibrium = false;
  double equilibrium_beta = 1.0;  // scale of the equilibrium initial guess
};

struct RateFit {
  double a = 0.0;
  double b = 0.0;
};

struct IterationReport {
  std::vector<double> increments;            // weighted-L1 of n^k - n^{k-1}
  std::vector<std::vector<double>> probe_history;  // per k, n^k at the probes
  std::vector<double> probe_positions;
  std::optional<RateFit> fit;                // at zeta_min
  std::vector<double> probe_rates;           // fitted a per probe
  double rate_spread = 0.0;                  // relative spread of probe_rates
  std::string fit_error;
  double contraction_k = 0.0;   // K
  double contraction_l = 0.0;   // script-L upper bound, < 1
  int monotonicity_violations = 0;
  int bound_violations = 0;
  bool bound_checked = false;   // false when the envelope constant is infinite
  double envelope_constant = 0.0;
  int iterations = 0;
  bool converged = false;
  double final_increment = 0.0;
};

struct ScenarioResult {
  std::shared_ptr<const OpticalDepthTable> table;
  DistributionField field;
  Eigen::ArrayXd density;  // converged collision-balance density
  Eigen::ArrayXd balance;  // final-sweep balance vector (flux telescoping)
  Eigen::ArrayXd f_inf;    // per-row incident values
  ShiftedMaxwellian input;
  IterationReport report;
};

// n(zeta) recomputed from the field by the velocity-coordinate rule:
// u = sqrt(2(eps - W)), monotone-cubic interpolation per branch side, with
// an analytic Maxwellian tail beyond eps_max.  The rule is normalized so a
// pure wall Maxwellian integrates exactly; used as the independent
// cross-check of the iteration density.
Eigen::ArrayXd compute_density(const OpticalDepthTable& table,
                               const DistributionField& field);

ScenarioResult solve(std::shared_ptr<const OpticalDepthTable> table,
                     const ShiftedMaxwellian& input, const SolverParams& params);

// Least-squares fit of log(increments[k]) = -a k + b over k >= k_min
// (1-based iteration indices).  Throws when fewer than 10 positive
// increments are available past k_min.
RateFit fit_rate(const std::vector<double>& increments, int k_min);

// K = sqrt(2) zeta_min / tau(0) + ell / sqrt(2), and the Theorem-2 bound
// L = 1 - e^{-K} erfc(sqrt(|W_min| + 1)) < 1.
std::pair<double, double> contraction_bound(const Potential& p,
                                            const RelaxationModel& r);

// Weighted-L1 norm of a profile difference: int |dn| dzeta / tau.
double weighted_l1(const OpticalDepthTable& table, const Eigen::ArrayXd& dn);

}  // namespace physisorb
