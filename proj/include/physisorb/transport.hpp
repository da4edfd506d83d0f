#pragma once

// Characteristic transport machinery: cumulative optical depth along each
// energy row, the attenuation function theta, and the source-iteration sweep
// mapping a density profile to the next distribution field.
//
// Discretization.  Along a row the transfer equation in the optical-depth
// coordinate psi (d psi = mu d zeta) is integrated exactly for a source that
// is piecewise linear in psi between master nodes (product integration,
// coefficients c0/c1).  Cells adjoining a turning point integrate mu after
// the substitution u = sqrt(|zeta - zeta_t|), which removes the inverse
// square-root singularity.  Partial cells at turning points and the far
// tail carry the master-end source value.
//
// The sweep also accumulates the collision-balance quadrature whose ratio
// defines the next density.  With that pairing the discrete iteration
// inherits the continuous scheme's properties exactly: nonnegativity,
// monotonicity in the source, preservation of the A e^{-eps} bound, an
// equilibrium fixed point with zero residual, and telescoping particle
// conservation (the interface flux equals a partial sum of the balance
// vector, which vanishes at the fixed point).

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "physisorb/grid.hpp"
#include "physisorb/model.hpp"

namespace physisorb {

struct RowTable {
  double eps = 0.0;
  bool trapped = false;
  bool zeta_b_truncated = false;  // 0- row and orbits cut at zeta_far
  double zeta_a = 0.0;
  double zeta_b = 0.0;  // trapped only
  int first = 0;        // first master index inside the allowed range
  int count = 0;        // number of master nodes in the row

  Eigen::ArrayXd dpsi, att, c0, c1;  // interior cells, size count-1
  Eigen::ArrayXd omc;                // 1 - att via expm1 (robust to underflow)
  Eigen::ArrayXd psi;                // optical depth from zeta_a at each node
  Eigen::ArrayXd maxw;               // M(zeta_m, eps) at the row's nodes

  double dpsi_birth = 0.0, att_birth = 1.0, omc_birth2 = 0.0;  // [zeta_a, first node]
  double dpsi_death = 0.0, att_death = 1.0, omc_death2 = 0.0;  // trapped: [last, zeta_b]
  double dpsi_tail = 0.0, att_tail = 1.0, omc_tail = 0.0;      // free: [zeta_max, inf)
  double psi_end = 0.0;  // zeta_a -> infinity (free) or zeta_a -> zeta_b (trapped)

  int last() const { return first + count - 1; }
};

struct OpticalDepthTable {
  Potential pot;
  RelaxationModel relax;
  EnergyGrid egrid;
  SpatialGrid sgrid;
  std::vector<RowTable> rows;

  Eigen::ArrayXd w_m, tau_m;  // W and tau at the masters
  Eigen::ArrayXd denom;       // collision-balance denominator per master
  std::vector<int> first_trapped_row;  // per master; -1 if none
  std::vector<int> first_free_row;     // per master (always valid)

  double mu(double s, double eps) const;          // 1/(tau sqrt(2(eps-W)))
  double psi_at(int row, double zeta) const;      // optical depth from zeta_a
  double theta_nodes(int row, int i, int k) const;  // between row-local nodes

  OpticalDepthTable(Potential p, RelaxationModel r) : pot(p), relax(r) {}
};

OpticalDepthTable build_optical_depth(const Potential& p, const RelaxationModel& r,
                                      const EnergyGrid& eg, const SpatialGrid& sg,
                                      int n_threads = 0);

struct DistributionField {
  std::vector<Eigen::ArrayXd> fplus, fminus;  // per row, values at the row's nodes
  Eigen::ArrayXd turn_a;    // F at zeta_a (all rows)
  Eigen::ArrayXd turn_b;    // F at zeta_b (trapped rows; NaN otherwise)
  Eigen::ArrayXd outgoing;  // F_+ at infinity (free rows; NaN otherwise)
  int iteration = 0;
};

struct SweepResult {
  DistributionField field;
  Eigen::ArrayXd density;  // collision-balance density at the masters
  Eigen::ArrayXd balance;  // B_m; interface flux = prefix sum of B
};

// f_inf holds F_infinity(-sqrt(2 eps_j)) per row (trapped entries ignored).
//
// The outer turning-point reflection of trapped orbits comes in two
// variants with the same fixed point.  When turn_b_prev is supplied, the
// inward pass starts from the previous iterate's outgoing value there (the
// one-bounce-per-iteration marching whose convergence rate the reference
// computations report); field.turn_b carries the updated values for the
// next call.  Without it, the orbit reflection is closed self-consistently
// within the sweep (the integral-form kernels), which is the verification
// path.
SweepResult sweep(const OpticalDepthTable& table, const Eigen::ArrayXd& n_prev,
                  const Eigen::ArrayXd& f_inf, int n_threads = 0,
                  const Eigen::ArrayXd* turn_b_prev = nullptr);

// Per-row incident boundary values from a distribution of c_z < 0.
Eigen::ArrayXd incident_values(const EnergyGrid& eg,
                               const std::function<double(double)>& f_infinity);

// Turning values (F at zeta_a, zeta_b) of a trapped row for given source
// samples g at the row's nodes: the optical-depth-weighted orbit averages.
std::pair<double, double> trapped_closure(const RowTable& row,
                                          const Eigen::ArrayXd& g);

// Explicit kernels of the integral form of the sweep; verification path only.
struct KernelPair {
  double k_plus = 0.0;
  double k_minus = 0.0;
};
KernelPair kernel_weights(const OpticalDepthTable& table, int row, double zeta,
                          double s);

// Full optical depth zeta_a(eps) -> infinity on a standalone mesh (used by
// the accommodation-function table, whose energies are off the energy grid).
double optical_depth_to_infinity(const Potential& p, const RelaxationModel& r,
                                 double eps, const TailPolicy& tail);

}  // namespace physisorb
