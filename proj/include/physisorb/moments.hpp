#pragma once

// Velocity-space post-processing of a distribution field: density/flux/
// normal-temperature profiles, pointwise reconstruction of F(zeta, c_z),
// and discontinuity tracking across the eps = 0 double node.

#include <Eigen/Dense>

#include <vector>

#include "physisorb/transport.hpp"

namespace physisorb {

struct MomentProfile {
  Eigen::ArrayXd zeta;    // master positions
  Eigen::ArrayXd n;       // collision-balance density
  Eigen::ArrayXd flux;    // int c_z F dc_z (telescoped scheme rule)
  Eigen::ArrayXd t_perp;  // NaN below zeta = 1 where n is not resolvable
  double flux_tol = 1e-6;
  double n_floor = 0.0;
};

struct VelocityCut {
  double zeta = 0.0;
  Eigen::ArrayXd cz;
  Eigen::ArrayXd f;
  std::vector<double> jump_locations;  // +-sqrt(-2 W(zeta)) where detected
};

// Moments of the velocity rule at one master: m0 = int f du,
// m1 = int u (F+ - F-) du, m2 = int u^2 f du with f = F+ + F-.
struct VelocityMoments {
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  double cal0 = 1.0, cal2 = 1.0;  // Maxwellian calibration factors
};
VelocityMoments velocity_moments_at(const OpticalDepthTable& table,
                                    const DistributionField& field, int m);

// Independent density rule (velocity-coordinate quadrature), for cross-checks.
Eigen::ArrayXd density_velocity_rule(const OpticalDepthTable& table,
                                     const DistributionField& field);

// Full profile from a converged sweep; `balance` is the final sweep's
// collision-balance vector whose prefix sums give the interface fluxes.
MomentProfile compute_moments(const OpticalDepthTable& table,
                              const DistributionField& field,
                              const Eigen::ArrayXd& density,
                              const Eigen::ArrayXd& balance);

// F(zeta, c_z) with the branch-correct side of the eps = 0 double node;
// returns 0 below the resolvable support.
double reconstruct_F(const OpticalDepthTable& table, const DistributionField& field,
                     double zeta, double cz);

// Jump locations +-sqrt(-2 W(zeta)) where the one-sided limits across the
// eps = 0 node differ by more than jump_tol; empty below zeta_a(0).
std::vector<double> locate_discontinuity(const OpticalDepthTable& table,
                                         const DistributionField& field, double zeta,
                                         double jump_tol = 1e-3);

// Magnitudes of the eps = 0 jump on each branch at a position (diagnostics).
struct JumpSizes {
  double minus_branch = 0.0;  // |F-(zeta, 0-) - F-(zeta, 0+)|
  double plus_branch = 0.0;
};
JumpSizes jump_sizes(const OpticalDepthTable& table, const DistributionField& field,
                     double zeta);

VelocityCut velocity_cut(const OpticalDepthTable& table, const DistributionField& field,
                         double zeta, int n_samples = 513, double cz_max = 5.0);

}  // namespace physisorb
