#pragma once

// Confinement potentials and gas-phonon relaxation-time models.
//
// Both Lennard-Jones wall potentials have a single minimum W_min = -kappa,
// diverge at zeta -> 0+ and vanish from below as zeta -> infinity.  The
// relaxation time tau(zeta) is increasing with a finite tau(0) and an
// integrable inverse; its tail integral has a closed form per kind.

#include <optional>
#include <stdexcept>

namespace physisorb {

enum class PotentialKind { LJ12_6, LJ9_3 };

struct TurningPoints {
  double zeta_a = 0.0;
  std::optional<double> zeta_b;  // present only for trapped energies (eps < 0)
};

class Potential {
 public:
  Potential(PotentialKind kind, double kappa);

  double value(double zeta) const;  // W(zeta)
  double slope(double zeta) const;  // W'(zeta), analytic

  double zeta_min() const { return zeta_min_; }
  double w_min() const { return -kappa_; }
  double zeta_zero() const { return 1.0; }  // W(1) = 0 for both kinds

  // Roots of W(zeta) = eps.  For eps >= 0 only the repulsive-branch root
  // zeta_a exists; for w_min <= eps < 0 both roots bracket zeta_min.
  TurningPoints turning_points(double eps) const;
  double zeta_a(double eps) const { return turning_points(eps).zeta_a; }

  PotentialKind kind() const { return kind_; }
  double kappa() const { return kappa_; }

 private:
  double solve_branch(double eps, double lo, double hi) const;

  PotentialKind kind_;
  double kappa_;
  double zeta_min_;
};

enum class RelaxationKind { Algebraic, Exponential };

class RelaxationModel {
 public:
  static RelaxationModel algebraic(double kappa_tau, double sigma, double nu);
  static RelaxationModel exponential(double kappa_tau, double sigma);

  double value(double zeta) const;  // tau(zeta)

  // ell = int_0^inf ds / tau(s), closed form.
  double tail_integral() const { return tail_integral_from(0.0); }
  // int_zeta^inf ds / tau(s), closed form.
  double tail_integral_from(double zeta) const;

  RelaxationKind kind() const { return kind_; }
  double kappa_tau() const { return kappa_tau_; }
  double sigma() const { return sigma_; }
  double nu() const { return nu_; }

 private:
  RelaxationModel(RelaxationKind kind, double kappa_tau, double sigma, double nu);

  RelaxationKind kind_;
  double kappa_tau_;
  double sigma_;
  double nu_;  // algebraic only
};

}  // namespace physisorb
