#include "physisorb/model.hpp"

#include <cmath>
#include <limits>

namespace physisorb {

namespace {
constexpr double kRootTol = 1e-16;  // relative, on zeta

double pow_int(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}
}  // namespace

Potential::Potential(PotentialKind kind, double kappa) : kind_(kind), kappa_(kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("Potential: kappa must be positive");
  zeta_min_ = (kind == PotentialKind::LJ12_6) ? std::pow(2.0, 1.0 / 6.0)
                                              : std::pow(3.0, 1.0 / 6.0);
}

double Potential::value(double zeta) const {
  if (!(zeta > 0.0)) throw std::domain_error("Potential: zeta must be positive");
  const double inv = 1.0 / zeta;
  if (kind_ == PotentialKind::LJ12_6) {
    const double x = pow_int(inv, 6);
    return 4.0 * kappa_ * (x * x - x);
  }
  const double y = pow_int(inv, 3);
  return 1.5 * std::sqrt(3.0) * kappa_ * (y * y * y - y);
}

double Potential::slope(double zeta) const {
  if (!(zeta > 0.0)) throw std::domain_error("Potential: zeta must be positive");
  const double inv = 1.0 / zeta;
  if (kind_ == PotentialKind::LJ12_6) {
    const double x6 = pow_int(inv, 6);
    return 4.0 * kappa_ * (-12.0 * x6 * x6 + 6.0 * x6) * inv;
  }
  const double y3 = pow_int(inv, 3);
  return 1.5 * std::sqrt(3.0) * kappa_ * (-9.0 * y3 * y3 * y3 + 3.0 * y3) * inv;
}

// Newton with bisection safeguard on a monotone branch [lo, hi].
double Potential::solve_branch(double eps, double lo, double hi) const {
  double flo = value(lo) - eps;
  double fhi = value(hi) - eps;
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  double z = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = value(z) - eps;
    if (f == 0.0) break;
    if ((f > 0.0) == (flo > 0.0)) {
      lo = z;
    } else {
      hi = z;
    }
    const double dz = f / slope(z);
    double zn = z - dz;
    if (!(zn > lo && zn < hi)) zn = 0.5 * (lo + hi);
    if (std::abs(zn - z) <= kRootTol * z) {
      z = zn;
      break;
    }
    z = zn;
  }
  // polish to the floating-point floor; skipped when the slope degenerates
  // near a double root
  for (int it = 0; it < 3; ++it) {
    const double sl = slope(z);
    if (sl == 0.0) break;
    const double dz = (value(z) - eps) / sl;
    if (!(std::abs(dz) < 0.1 * z)) break;
    z -= dz;
    if (std::abs(dz) <= 2e-16 * z) break;
  }
  return z;
}

TurningPoints Potential::turning_points(double eps) const {
  const double wmin = w_min();
  if (eps < wmin) throw std::domain_error("turning_points: eps below the well minimum");

  TurningPoints tp;
  if (eps == wmin) {
    tp.zeta_a = zeta_min_;
    tp.zeta_b = zeta_min_;
    return tp;
  }

  if (kind_ == PotentialKind::LJ12_6) {
    // W = 4 kappa (x^2 - x), x = zeta^{-6}; roots x = (1 +- sqrt(1+eps/kappa))/2.
    const double s = std::sqrt(1.0 + eps / kappa_);
    const double xa = 0.5 * (1.0 + s);
    double za = std::pow(xa, -1.0 / 6.0);
    za -= (value(za) - eps) / slope(za);  // kill the pow round-off
    za -= (value(za) - eps) / slope(za);
    tp.zeta_a = za;
    if (eps < 0.0) {
      const double xb = 0.5 * (1.0 - s);
      double zb = std::pow(xb, -1.0 / 6.0);
      zb -= (value(zb) - eps) / slope(zb);
      zb -= (value(zb) - eps) / slope(zb);
      tp.zeta_b = zb;
    }
    return tp;
  }

  // LJ(9,3): bracketed Newton on each monotone branch.
  double lo = 0.9 * zeta_min_;
  while (value(lo) < eps) lo *= 0.7;  // W -> +infinity at the wall
  tp.zeta_a = solve_branch(eps, lo, zeta_min_);
  if (eps < 0.0) {
    double hi = 2.0 * zeta_min_;
    while (value(hi) < eps && hi < 1e150) hi *= 2.0;  // W -> 0^- from below
    tp.zeta_b = solve_branch(eps, zeta_min_, hi);
  }
  return tp;
}

RelaxationModel::RelaxationModel(RelaxationKind kind, double kappa_tau, double sigma,
                                 double nu)
    : kind_(kind), kappa_tau_(kappa_tau), sigma_(sigma), nu_(nu) {
  if (!(kappa_tau > 0.0)) throw std::invalid_argument("RelaxationModel: kappa_tau must be positive");
  if (!(sigma > 0.0)) throw std::invalid_argument("RelaxationModel: sigma must be positive");
  if (kind == RelaxationKind::Algebraic && !(nu > 1.0))
    throw std::invalid_argument("RelaxationModel: nu must exceed 1");
}

RelaxationModel RelaxationModel::algebraic(double kappa_tau, double sigma, double nu) {
  return RelaxationModel(RelaxationKind::Algebraic, kappa_tau, sigma, nu);
}

RelaxationModel RelaxationModel::exponential(double kappa_tau, double sigma) {
  return RelaxationModel(RelaxationKind::Exponential, kappa_tau, sigma,
                         std::numeric_limits<double>::quiet_NaN());
}

double RelaxationModel::value(double zeta) const {
  if (zeta < 0.0) throw std::domain_error("RelaxationModel: zeta must be nonnegative");
  if (kind_ == RelaxationKind::Algebraic)
    return kappa_tau_ * std::pow(1.0 + sigma_ * zeta / nu_, nu_);
  return kappa_tau_ * std::exp(sigma_ * zeta);
}

double RelaxationModel::tail_integral_from(double zeta) const {
  if (zeta < 0.0) throw std::domain_error("RelaxationModel: zeta must be nonnegative");
  if (kind_ == RelaxationKind::Algebraic) {
    // int (1 + sigma s / nu)^{-nu} ds = (nu / (sigma (nu-1))) (1 + sigma z / nu)^{1-nu}
    return nu_ / (kappa_tau_ * sigma_ * (nu_ - 1.0)) *
           std::pow(1.0 + sigma_ * zeta / nu_, 1.0 - nu_);
  }
  return std::exp(-sigma_ * zeta) / (kappa_tau_ * sigma_);
}

}  // namespace physisorb
