#pragma once

// Incident distributions at infinity.

#include <cmath>
#include <limits>

namespace physisorb {

// F_infinity(c_z) = exp(-(c_z - v)^2 / (2T)) / sqrt(2 pi T), imposed for c_z < 0.
struct ShiftedMaxwellian {
  double t_inf = 1.0;
  double vz_inf = 0.0;

  double operator()(double cz) const {
    const double d = cz - vz_inf;
    return std::exp(-d * d / (2.0 * t_inf)) / std::sqrt(2.0 * M_PI * t_inf);
  }

  // Smallest A with F_infinity(c) <= A e^{-c^2/2} / sqrt(2 pi); infinite when
  // the Gaussian envelope cannot dominate (T > 1, or T = 1 with drift).
  double envelope_constant() const {
    if (t_inf < 1.0)
      return std::exp(vz_inf * vz_inf / (2.0 * (1.0 - t_inf))) / std::sqrt(t_inf);
    if (t_inf == 1.0 && vz_inf == 0.0) return 1.0;
    return std::numeric_limits<double>::infinity();
  }
};

}  // namespace physisorb
