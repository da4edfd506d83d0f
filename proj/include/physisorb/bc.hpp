#pragma once

// Gas-surface boundary-condition artifacts: the outgoing distribution at
// infinity from a converged solve, the accommodation-function model based on
// the first iteration, and the second-iteration model realized as two
// transport sweeps from the equilibrium-scaled initial guess.

#include <Eigen/Dense>

#include <functional>
#include <string>

#include "physisorb/solver.hpp"

namespace physisorb::bc {

enum class ModelOrder { First, Second };

struct BoundaryModel {
  Eigen::ArrayXd cz;     // tabulated positive speeds
  Eigen::ArrayXd alpha;  // alpha(c_z^2) = 1 - theta(zeta_a(c_z^2/2), inf)^2
  ModelOrder order = ModelOrder::First;

  double alpha_at(double c) const;  // monotone interpolation, clamped
};

enum class OutgoingSource { FullSolve, FirstModel, SecondModel };

struct OutgoingDistribution {
  Eigen::ArrayXd cz;  // positive
  Eigen::ArrayXd f;
  OutgoingSource source = OutgoingSource::FullSolve;
  double flux_out = 0.0;  // int_0^inf c F dc
  double flux_in = 0.0;   // int_{-inf}^0 |c| F_in dc, same quadrature family
  double beta = 0.0;      // normalization used (models only)
};

// Default log-spaced accommodation grid, 1e-3 .. 20.
Eigen::ArrayXd default_alpha_grid(int n = 96);

BoundaryModel build_alpha(const Potential& p, const RelaxationModel& r,
                          const Eigen::ArrayXd& cz_grid,
                          const TailPolicy& tail = TailPolicy{});

// beta of the first-iteration model for an incident distribution (c_z < 0).
double beta_value(const BoundaryModel& bm,
                  const std::function<double(double)>& f_incident);

// F_out(c) = (1 - alpha) F_in(-c) + alpha beta M(c) on the requested grid.
OutgoingDistribution apply_first_model(const BoundaryModel& bm,
                                       const std::function<double(double)>& f_incident,
                                       const Eigen::ArrayXd& cz_grid);

// Two sweeps from n0 = beta e^{-W}; beta normalizes the returned iterate to
// zero net flux (the particle-conservation rule applied to f^2).
OutgoingDistribution apply_second_model(const OpticalDepthTable& table,
                                        const ShiftedMaxwellian& input,
                                        const Eigen::ArrayXd& cz_grid,
                                        int threads = 0);

// F_+ at infinity from a converged solve, resampled on cz_grid.
OutgoingDistribution outgoing_from_solution(const ScenarioResult& result,
                                            const Eigen::ArrayXd& cz_grid);

// Two-column text table with a beta-metadata header; 17 significant digits,
// bit-exact round trip at that precision.
void save_boundary_model(const std::string& path, const BoundaryModel& bm,
                         double beta, const std::string& beta_rule);
BoundaryModel load_boundary_model(const std::string& path, double* beta_out = nullptr,
                                  std::string* beta_rule_out = nullptr);

}  // namespace physisorb::bc
