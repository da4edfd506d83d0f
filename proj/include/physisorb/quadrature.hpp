#pragma once

// Shared low-level quadrature utilities: Gauss-Legendre panels, the
// exponential moments used by the product-integration sweep, monotone
// cubic (PCHIP) interpolation with exact integrals, and a small adaptive
// Simpson integrator for oracle-style checks.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace physisorb {

// 8-point Gauss-Legendre on [-1, 1].
inline constexpr std::array<double, 8> kGaussX = {
    -0.96028985649753623, -0.79666647741362674, -0.52553240991632899,
    -0.18343464249564980, 0.18343464249564980,  0.52553240991632899,
    0.79666647741362674,  0.96028985649753623};
inline constexpr std::array<double, 8> kGaussW = {
    0.10122853629037626, 0.22238103445337447, 0.31370664587788729,
    0.36268378337836198, 0.36268378337836198, 0.31370664587788729,
    0.22238103445337447, 0.10122853629037626};

template <class F>
double gauss_panel(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < 8; ++i) acc += kGaussW[i] * f(mid + half * kGaussX[i]);
  return acc * half;
}

// Moments of a linear source against the attenuation kernel on one cell of
// optical depth d:
//   c0(d) = int_0^d e^{-x} (1 - x/d) dx,   c1(d) = int_0^d e^{-x} (x/d) dx
//   d0(d) = int_0^d e^{+x} (1 - x/d) dx,   d1(d) = int_0^d e^{+x} (x/d) dx
// c0 + c1 = 1 - e^{-d}; d0 + d1 = e^{d} - 1.
struct ExpMoments {
  double att;  // e^{-d}
  double c0, c1;
};

inline ExpMoments exp_moments(double d) {
  ExpMoments m;
  m.att = std::exp(-d);
  if (d < 1e-2) {
    // series of (1 - (1+d)e^{-d})/d = sum_{k>=2} (-1)^k (k-1)/k! d^{k-1}
    const double d2 = d * d;
    m.c1 = d / 2.0 - d2 / 3.0 + d2 * d / 8.0 - d2 * d2 / 30.0 +
           d2 * d2 * d / 144.0;
  } else {
    m.c1 = (1.0 - (1.0 + d) * m.att) / d;
  }
  m.c0 = -std::expm1(-d) - m.c1;
  return m;
}

struct ExpMomentsPos {
  double grow;  // e^{+d}
  double d0, d1;
};

inline ExpMomentsPos exp_moments_pos(double d) {
  ExpMomentsPos m;
  m.grow = std::exp(d);
  if (d < 1e-2) {
    const double d2 = d * d;
    m.d1 = d / 2.0 + d2 / 3.0 + d2 * d / 8.0 + d2 * d2 / 30.0 +
           d2 * d2 * d / 144.0;
  } else {
    m.d1 = ((d - 1.0) * m.grow + 1.0) / d;
  }
  m.d0 = std::expm1(d) - m.d1;
  return m;
}

// Monotone piecewise-cubic interpolant (Fritsch-Carlson) with exact
// integrals of p(u) and u^2 p(u). Nodes must be strictly increasing.
class Pchip {
 public:
  Pchip() = default;
  Pchip(Eigen::ArrayXd x, Eigen::ArrayXd y) : x_(std::move(x)), y_(std::move(y)) {
    const Eigen::Index n = x_.size();
    if (n != y_.size() || n < 2) throw std::invalid_argument("pchip: need >= 2 nodes");
    m_.resize(n);
    Eigen::ArrayXd h = x_.tail(n - 1) - x_.head(n - 1);
    Eigen::ArrayXd d = (y_.tail(n - 1) - y_.head(n - 1)) / h;
    for (Eigen::Index i = 1; i < n - 1; ++i) {
      if (d[i - 1] * d[i] <= 0.0) {
        m_[i] = 0.0;
      } else {
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
      }
    }
    m_[0] = end_slope(h[0], n > 2 ? h[1] : h[0], d[0], n > 2 ? d[1] : d[0]);
    m_[n - 1] = end_slope(h[n - 2], n > 2 ? h[n - 3] : h[n - 2], d[n - 2],
                          n > 2 ? d[n - 3] : d[n - 2]);
  }

  double operator()(double u) const {
    const Eigen::Index n = x_.size();
    if (u <= x_[0]) return y_[0] + m_[0] * (u - x_[0]);
    if (u >= x_[n - 1]) return y_[n - 1] + m_[n - 1] * (u - x_[n - 1]);
    Eigen::Index i = locate(u);
    const double h = x_[i + 1] - x_[i];
    const double s = (u - x_[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    return y_[i] * (2 * s3 - 3 * s2 + 1) + h * m_[i] * (s3 - 2 * s2 + s) +
           y_[i + 1] * (-2 * s3 + 3 * s2) + h * m_[i + 1] * (s3 - s2);
  }

  // int_{x0}^{xN} p(u) du
  double integral() const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i + 1 < x_.size(); ++i) {
      const double h = x_[i + 1] - x_[i];
      acc += h * 0.5 * (y_[i] + y_[i + 1]) + h * h * (m_[i] - m_[i + 1]) / 12.0;
    }
    return acc;
  }

  // int_{x0}^{xN} u p(u) du
  double integral_u1() const {
    static constexpr double M0[4] = {0.5, 1.0 / 12.0, 0.5, -1.0 / 12.0};
    static constexpr double M1[4] = {3.0 / 20.0, 1.0 / 30.0, 7.0 / 20.0, -1.0 / 20.0};
    double acc = 0.0;
    for (Eigen::Index i = 0; i + 1 < x_.size(); ++i) {
      const double h = x_[i + 1] - x_[i];
      const double a = x_[i];
      const double c[4] = {y_[i], h * m_[i], y_[i + 1], h * m_[i + 1]};
      double i0 = 0, i1 = 0;
      for (int k = 0; k < 4; ++k) {
        i0 += c[k] * M0[k];
        i1 += c[k] * M1[k];
      }
      acc += h * (a * i0 + h * i1);
    }
    return acc;
  }

  // int_{x0}^{xN} u^2 p(u) du
  double integral_u2() const {
    // Hermite basis moments: int s^k H(s) ds over [0,1], k = 0,1,2.
    static constexpr double M0[4] = {0.5, 1.0 / 12.0, 0.5, -1.0 / 12.0};
    static constexpr double M1[4] = {3.0 / 20.0, 1.0 / 30.0, 7.0 / 20.0, -1.0 / 20.0};
    static constexpr double M2[4] = {1.0 / 15.0, 1.0 / 60.0, 4.0 / 15.0, -1.0 / 30.0};
    double acc = 0.0;
    for (Eigen::Index i = 0; i + 1 < x_.size(); ++i) {
      const double h = x_[i + 1] - x_[i];
      const double a = x_[i];
      const double c[4] = {y_[i], h * m_[i], y_[i + 1], h * m_[i + 1]};
      double i0 = 0, i1 = 0, i2 = 0;
      for (int k = 0; k < 4; ++k) {
        i0 += c[k] * M0[k];
        i1 += c[k] * M1[k];
        i2 += c[k] * M2[k];
      }
      // u = a + h s -> u^2 = a^2 + 2 a h s + h^2 s^2
      acc += h * (a * a * i0 + 2.0 * a * h * i1 + h * h * i2);
    }
    return acc;
  }

  const Eigen::ArrayXd& x() const { return x_; }
  const Eigen::ArrayXd& y() const { return y_; }

 private:
  static double end_slope(double h0, double h1, double d0, double d1) {
    double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (m * d0 <= 0.0) return 0.0;
    if (std::abs(m) > 3.0 * std::abs(d0)) return 3.0 * d0;
    return m;
  }
  Eigen::Index locate(double u) const {
    Eigen::Index lo = 0, hi = x_.size() - 1;
    while (hi - lo > 1) {
      const Eigen::Index mid = (lo + hi) / 2;
      (x_[mid] <= u ? lo : hi) = mid;
    }
    return lo;
  }
  Eigen::ArrayXd x_, y_, m_;
};

// Adaptive Simpson, used by oracle tests and the boundary-condition
// quadratures where integrands are cheap and smooth.
namespace detail {
inline double simpson_rec(const std::function<double(double)>& f, double a,
                          double b, double fa, double fm, double fb, double whole,
                          double tol, double min_h, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || b - a < min_h || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, tol * 0.5, min_h, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, tol * 0.5, min_h, depth - 1);
}
}  // namespace detail

inline double integrate_adaptive(const std::function<double(double)>& f, double a,
                                 double b, double tol = 1e-11, int depth = 28) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double min_h = 1e-7 * std::abs(b - a);
  return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, min_h, depth);
}

}  // namespace physisorb
