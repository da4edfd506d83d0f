#include "physisorb/transport.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "physisorb/quadrature.hpp"

namespace physisorb {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInvSqrt2Pi = 0.39894228040143268;

struct CellContext {
  const Potential* p;
  const RelaxationModel* r;
  double eps;
  double za;   // inner turning point
  double zb;   // outer turning point, +inf when absent
  double dwa;  // |W'(za)|
  double dwb;  // |W'(zb)|
};

// eps - W with a linearized fallback when round-off near a turning point
// makes the direct difference nonpositive.  u2 arguments carry the squared
// substitution coordinate when s came from za + u^2 (resp. zb - u^2).
double mu_guarded(const CellContext& c, double s, double u2a, double u2b) {
  double d = c.eps - c.p->value(s);
  if (d <= 0.0) {
    if (u2a >= 0.0) d = c.dwa * u2a;
    else if (u2b >= 0.0) d = c.dwb * u2b;
    if (d <= 0.0) return 0.0;
  }
  return 1.0 / (c.r->value(s) * std::sqrt(2.0 * d));
}

template <class F>
double gauss_two_panels(F&& f, double a, double b) {
  const double m = 0.5 * (a + b);
  return gauss_panel(f, a, m) + gauss_panel(f, m, b);
}

double depth_plain(const CellContext& c, double a, double b) {
  return gauss_two_panels([&](double s) { return mu_guarded(c, s, -1.0, -1.0); }, a,
                          b);
}

double depth_usub_a(const CellContext& c, double a, double b) {
  const double ua = std::sqrt(std::max(0.0, a - c.za));
  const double ub = std::sqrt(std::max(0.0, b - c.za));
  return gauss_two_panels(
      [&](double u) { return 2.0 * u * mu_guarded(c, c.za + u * u, u * u, -1.0); },
      ua, ub);
}

double depth_usub_b(const CellContext& c, double a, double b) {
  const double ua = std::sqrt(std::max(0.0, c.zb - a));
  const double ub = std::sqrt(std::max(0.0, c.zb - b));
  return gauss_two_panels(
      [&](double u) { return 2.0 * u * mu_guarded(c, c.zb - u * u, -1.0, u * u); },
      ub, ua);
}

enum class CellRule { Plain, SubA, SubB, Split };

CellRule decide_rule(const CellContext& c, double a, double b) {
  const double w = b - a;
  const bool near_a = (a - c.za) < w;
  const bool near_b = std::isfinite(c.zb) && (c.zb - b) < w;
  if (near_a && near_b) return CellRule::Split;
  if (near_a) return CellRule::SubA;
  if (near_b) return CellRule::SubB;
  return CellRule::Plain;
}

// Optical depth across [a, x] inside a cell [a, b] whose integration rule
// was decided from the full cell; keeping the rule fixed makes the partial
// depth a continuous function of the upper limit.
double cell_depth_partial(const CellContext& c, double a, double b, double x) {
  if (!(x > a)) return 0.0;
  const CellRule rule = decide_rule(c, a, b);
  switch (rule) {
    case CellRule::SubA:
      return depth_usub_a(c, a, x);
    case CellRule::SubB:
      return depth_usub_b(c, a, x);
    case CellRule::Split: {
      const double m = 0.5 * (a + b);
      if (x <= m) return depth_usub_a(c, a, x);
      return depth_usub_a(c, a, m) + depth_usub_b(c, m, x);
    }
    case CellRule::Plain:
      break;
  }
  return depth_plain(c, a, x);
}

double cell_depth(const CellContext& c, double a, double b) {
  return cell_depth_partial(c, a, b, b);
}

std::vector<double> log_mesh(double a, double b, int cells) {
  std::vector<double> pts(cells + 1);
  const double lr = std::log(b / a);
  for (int i = 0; i <= cells; ++i) pts[i] = a * std::exp(lr * double(i) / cells);
  pts.front() = a;
  pts.back() = b;
  return pts;
}

template <class Fn>
void parallel_rows(int n, int threads, Fn&& fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

CellContext row_context(const OpticalDepthTable& t, const RowTable& row) {
  CellContext c{&t.pot, &t.relax, row.eps, row.zeta_a, kInf,
                std::abs(t.pot.slope(row.zeta_a)), 0.0};
  if (row.trapped && !row.zeta_b_truncated) {
    c.zb = row.zeta_b;
    c.dwb = std::abs(t.pot.slope(row.zeta_b));
  }
  return c;
}

}  // namespace

double OpticalDepthTable::mu(double s, double eps) const {
  const double d = eps - pot.value(s);
  if (d <= 0.0) throw std::domain_error("mu: point outside the allowed region");
  return 1.0 / (relax.value(s) * std::sqrt(2.0 * d));
}

double OpticalDepthTable::theta_nodes(int row, int i, int k) const {
  const RowTable& r = rows[row];
  return std::exp(-(r.psi[k] - r.psi[i]));
}

double OpticalDepthTable::psi_at(int row_index, double zeta) const {
  const RowTable& row = rows[row_index];
  const CellContext c = row_context(*this, row);
  const double hi = row.trapped ? std::min(row.zeta_b, sgrid.zeta_max) : sgrid.zeta_max;
  if (zeta < row.zeta_a - 1e-12 || zeta > hi + 1e-12)
    throw std::domain_error("psi_at: zeta outside the allowed range");
  const auto& M = sgrid.masters;
  if (row.count == 0 || zeta <= M[row.first])
    return cell_depth_partial(c, row.zeta_a, row.count ? M[row.first] : zeta, zeta);
  const double* begin = M.data() + row.first;
  const double* end = M.data() + row.first + row.count;
  const double* it = std::upper_bound(begin, end, zeta);
  const int i = static_cast<int>(it - begin) - 1;  // row-local node below zeta
  const double cell_end =
      (i + 1 < row.count) ? M[row.first + i + 1]
                          : (row.trapped ? std::min(row.zeta_b, sgrid.zeta_max)
                                         : sgrid.zeta_max);
  return row.psi[i] + cell_depth_partial(c, M[row.first + i], cell_end, zeta);
}

Eigen::ArrayXd incident_values(const EnergyGrid& eg,
                               const std::function<double(double)>& f_infinity) {
  Eigen::ArrayXd v = Eigen::ArrayXd::Zero(eg.size());
  for (int j = eg.i_zero_plus; j < eg.size(); ++j)
    v[j] = f_infinity(-std::sqrt(2.0 * eg.nodes[j]));
  return v;
}

OpticalDepthTable build_optical_depth(const Potential& p, const RelaxationModel& r,
                                      const EnergyGrid& eg, const SpatialGrid& sg,
                                      int n_threads) {
  OpticalDepthTable t(p, r);
  t.egrid = eg;
  t.sgrid = sg;
  const int nm = sg.size();
  const int nrows = eg.size();
  t.rows.resize(nrows);

  t.w_m.resize(nm);
  t.tau_m.resize(nm);
  for (int m = 0; m < nm; ++m) {
    t.w_m[m] = p.value(sg.masters[m]);
    t.tau_m[m] = r.value(sg.masters[m]);
  }

  const auto& M = sg.masters;
  parallel_rows(nrows, n_threads, [&](int j) {
    RowTable& row = t.rows[j];
    row.eps = eg.nodes[j];
    row.trapped = eg.trapped(j);

    const TurningPoints tp = p.turning_points(row.eps);
    row.zeta_a = tp.zeta_a;
    if (row.trapped) {
      if (tp.zeta_b.has_value() && *tp.zeta_b <= sg.tail.zeta_far) {
        row.zeta_b = *tp.zeta_b;
      } else {
        row.zeta_b = sg.tail.zeta_far;
        row.zeta_b_truncated = true;
      }
    }
    const CellContext c = row_context(t, row);

    const double za_eff = row.zeta_a - 1e-12 * std::max(1.0, row.zeta_a);
    int first = static_cast<int>(
        std::lower_bound(M.data(), M.data() + nm, za_eff) - M.data());
    int last = nm - 1;
    if (row.trapped && row.zeta_b < sg.zeta_max) {
      const double zb_eff = row.zeta_b + 1e-12 * std::max(1.0, row.zeta_b);
      last = static_cast<int>(
          std::upper_bound(M.data(), M.data() + nm, zb_eff) - M.data()) - 1;
    }
    row.first = first;
    row.count = std::max(0, last - first + 1);
    if (row.count == 0) return;  // orbit falls between masters; carries no mass

    row.maxw.resize(row.count);
    for (int i = 0; i < row.count; ++i)
      row.maxw[i] = std::exp(-(row.eps - t.w_m[first + i])) * kInvSqrt2Pi;

    row.dpsi_birth = cell_depth(c, row.zeta_a, M[first]);
    row.att_birth = std::exp(-row.dpsi_birth);
    row.omc_birth2 = -std::expm1(-2.0 * row.dpsi_birth);

    const int ncells = row.count - 1;
    row.dpsi.resize(ncells);
    row.att.resize(ncells);
    row.omc.resize(ncells);
    row.c0.resize(ncells);
    row.c1.resize(ncells);
    row.psi.resize(row.count);
    row.psi[0] = row.dpsi_birth;
    for (int i = 0; i < ncells; ++i) {
      const double d = cell_depth(c, M[first + i], M[first + i + 1]);
      const ExpMoments em = exp_moments(d);
      row.dpsi[i] = d;
      row.att[i] = em.att;
      row.omc[i] = -std::expm1(-d);
      row.c0[i] = em.c0;
      row.c1[i] = em.c1;
      row.psi[i + 1] = row.psi[i] + d;
    }

    if (row.trapped) {
      double d = 0.0;
      if (row.zeta_b <= sg.zeta_max) {
        d = cell_depth(c, M[first + row.count - 1], row.zeta_b);
      } else {
        d = cell_depth(c, M[first + row.count - 1], sg.zeta_max);
        const auto pts = log_mesh(sg.zeta_max, sg.tail.zeta_far, sg.tail.n_cells);
        for (size_t i = 0; i + 1 < pts.size(); ++i) {
          const double a = pts[i];
          const double b = std::min(pts[i + 1], row.zeta_b);
          d += cell_depth(c, a, b);
          if (b >= row.zeta_b) break;
        }
      }
      row.dpsi_death = d;
      row.att_death = std::exp(-d);
      row.omc_death2 = -std::expm1(-2.0 * d);
      row.psi_end = row.psi[row.count - 1] + d;
    } else {
      double d = 0.0;
      const auto pts = log_mesh(sg.zeta_max, sg.tail.zeta_far, sg.tail.n_cells);
      for (size_t i = 0; i + 1 < pts.size(); ++i) d += cell_depth(c, pts[i], pts[i + 1]);
      if (row.eps > 0.0)
        d += r.tail_integral_from(sg.tail.zeta_far) / std::sqrt(2.0 * row.eps);
      row.dpsi_tail = d;
      row.att_tail = std::exp(-d);
      row.omc_tail = -std::expm1(-d);
      row.psi_end = row.psi[row.count - 1] + d;
    }
  });

  // Collision-balance denominators (fixed linear weights of the sweep).
  t.denom = Eigen::ArrayXd::Zero(nm);
  for (int j = 0; j < nrows; ++j) {
    const RowTable& row = t.rows[j];
    if (row.count == 0) continue;
    const double v = eg.weights[j];
    for (int i = 0; i + 1 < row.count; ++i) {
      const double cc = row.omc[i];
      t.denom[row.first + i] += v * cc * row.maxw[i];
      t.denom[row.first + i + 1] += v * cc * row.maxw[i + 1];
    }
    t.denom[row.first] += v * row.omc_birth2 * row.maxw[0];
    const int l = row.count - 1;
    if (row.trapped) {
      t.denom[row.first + l] += v * row.omc_death2 * row.maxw[l];
    } else {
      t.denom[row.first + l] += v * 2.0 * row.omc_tail * row.maxw[l];
    }
  }

  // First containing row per master within each band (orbits are nested).
  t.first_trapped_row.assign(nm, -1);
  t.first_free_row.assign(nm, -1);
  for (int j = 0; j < nrows; ++j) {
    const RowTable& row = t.rows[j];
    if (row.count == 0) continue;
    auto& mark = eg.trapped(j) ? t.first_trapped_row : t.first_free_row;
    for (int m = row.first; m <= row.last(); ++m)
      if (mark[m] < 0) mark[m] = j;
  }
  return t;
}

std::pair<double, double> trapped_closure(const RowTable& row, const Eigen::ArrayXd& g) {
  // Turning values are optical-depth-weighted averages of the source over
  // the orbit, accumulated as decaying exponentials from either end so the
  // fill passes land on them consistently.
  const int n = row.count;
  const double psi_b = row.psi_end;
  double jm = g[0] * (-std::expm1(-row.dpsi_birth));
  double jp = g[0] * std::exp(row.dpsi_birth - psi_b) * (-std::expm1(-row.dpsi_birth));
  for (int i = 0; i + 1 < n; ++i) {
    const double wl = std::exp(-row.psi[i]);
    jm += wl * (g[i] * row.c0[i] + g[i + 1] * row.c1[i]);
    const ExpMomentsPos ep = exp_moments_pos(row.dpsi[i]);
    const double wp = std::exp(row.psi[i] - psi_b);
    jp += wp * (g[i] * ep.d0 + g[i + 1] * ep.d1);
  }
  jm += std::exp(-row.psi[n - 1]) * g[n - 1] * (-std::expm1(-row.dpsi_death));
  jp += g[n - 1] * (-std::expm1(-row.dpsi_death));
  const double denom_orbit = -std::expm1(-2.0 * psi_b);
  if (!(denom_orbit > 0.0)) return {g[0], g[0]};
  const double eb = std::exp(-psi_b);
  return {(jm + eb * jp) / denom_orbit, (jp + eb * jm) / denom_orbit};
}

SweepResult sweep(const OpticalDepthTable& t, const Eigen::ArrayXd& n_prev,
                  const Eigen::ArrayXd& f_inf, int n_threads,
                  const Eigen::ArrayXd* turn_b_prev) {
  const int nm = t.sgrid.size();
  const int nrows = static_cast<int>(t.rows.size());
  if (n_prev.size() != nm) throw std::invalid_argument("sweep: density size mismatch");
  if (f_inf.size() != nrows) throw std::invalid_argument("sweep: f_inf size mismatch");
  if ((n_prev < 0.0).any())
    throw std::invalid_argument("sweep: negative density violates the contract");
  if (turn_b_prev && turn_b_prev->size() != nrows)
    throw std::invalid_argument("sweep: turn_b size mismatch");

  SweepResult out;
  out.field.fplus.resize(nrows);
  out.field.fminus.resize(nrows);
  out.field.turn_a = Eigen::ArrayXd::Constant(nrows, kNaN);
  out.field.turn_b = Eigen::ArrayXd::Constant(nrows, kNaN);
  out.field.outgoing = Eigen::ArrayXd::Constant(nrows, kNaN);

  parallel_rows(nrows, n_threads, [&](int j) {
    const RowTable& row = t.rows[j];
    if (row.count == 0) return;
    const int n = row.count;
    Eigen::ArrayXd g(n);
    for (int i = 0; i < n; ++i) g[i] = n_prev[row.first + i] * row.maxw[i];

    Eigen::ArrayXd fp(n), fm(n);
    if (!row.trapped) {
      const double fin = f_inf[j];
      fm[n - 1] = row.att_tail * fin + (1.0 - row.att_tail) * g[n - 1];
      for (int i = n - 2; i >= 0; --i)
        fm[i] = row.att[i] * fm[i + 1] + g[i] * row.c0[i] + g[i + 1] * row.c1[i];
      const double ta = row.att_birth * fm[0] + (1.0 - row.att_birth) * g[0];
      fp[0] = row.att_birth * ta + (1.0 - row.att_birth) * g[0];
      for (int i = 0; i + 1 < n; ++i)
        fp[i + 1] = row.att[i] * fp[i] + g[i] * row.c1[i] + g[i + 1] * row.c0[i];
      out.field.turn_a[j] = ta;
      out.field.outgoing[j] =
          row.att_tail * fp[n - 1] + (1.0 - row.att_tail) * g[n - 1];
    } else if (turn_b_prev) {
      // Lagged outer reflection: F- marches inward from the previous
      // iterate's outgoing turning value, F+ back out from the current
      // inner one; the orbit equilibrates across iterations.
      const double tb_in = std::isfinite((*turn_b_prev)[j]) ? (*turn_b_prev)[j] : 0.0;
      fm[n - 1] = row.att_death * tb_in + (1.0 - row.att_death) * g[n - 1];
      for (int i = n - 2; i >= 0; --i)
        fm[i] = row.att[i] * fm[i + 1] + g[i] * row.c0[i] + g[i + 1] * row.c1[i];
      const double ta = row.att_birth * fm[0] + (1.0 - row.att_birth) * g[0];
      fp[0] = row.att_birth * ta + (1.0 - row.att_birth) * g[0];
      for (int i = 0; i + 1 < n; ++i)
        fp[i + 1] = row.att[i] * fp[i] + g[i] * row.c1[i] + g[i + 1] * row.c0[i];
      out.field.turn_a[j] = ta;
      out.field.turn_b[j] =
          row.att_death * fp[n - 1] + (1.0 - row.att_death) * g[n - 1];
    } else {
      const auto [ta, tb] = trapped_closure(row, g);
      fp[0] = row.att_birth * ta + (1.0 - row.att_birth) * g[0];
      for (int i = 0; i + 1 < n; ++i)
        fp[i + 1] = row.att[i] * fp[i] + g[i] * row.c1[i] + g[i + 1] * row.c0[i];
      fm[n - 1] = row.att_death * tb + (1.0 - row.att_death) * g[n - 1];
      for (int i = n - 2; i >= 0; --i)
        fm[i] = row.att[i] * fm[i + 1] + g[i] * row.c0[i] + g[i + 1] * row.c1[i];
      out.field.turn_a[j] = ta;
      out.field.turn_b[j] = tb;
    }
    out.field.fplus[j] = std::move(fp);
    out.field.fminus[j] = std::move(fm);
  });

  // Collision-balance numerators, accumulated in row order for determinism.
  Eigen::ArrayXd numer = Eigen::ArrayXd::Zero(nm);
  for (int j = 0; j < nrows; ++j) {
    const RowTable& row = t.rows[j];
    if (row.count == 0) continue;
    const double v = t.egrid.weights[j];
    const auto& fp = out.field.fplus[j];
    const auto& fm = out.field.fminus[j];
    for (int i = 0; i + 1 < row.count; ++i) {
      const double cc = v * row.omc[i];
      numer[row.first + i] += cc * fp[i];
      numer[row.first + i + 1] += cc * fm[i + 1];
    }
    numer[row.first] += v * row.omc_birth2 * fm[0];
    const int l = row.count - 1;
    if (row.trapped) {
      numer[row.first + l] += v * row.omc_death2 * fp[l];
    } else {
      numer[row.first + l] += v * row.omc_tail * (fp[l] + f_inf[j]);
    }
  }

  out.density.resize(nm);
  for (int m = 0; m < nm; ++m)
    out.density[m] = t.denom[m] > 0.0 ? numer[m] / t.denom[m] : 0.0;
  out.balance = t.denom * n_prev - numer;
  return out;
}

KernelPair kernel_weights(const OpticalDepthTable& t, int row_index, double zeta,
                          double s) {
  const RowTable& row = t.rows[row_index];
  const double hi = row.trapped ? std::min(row.zeta_b, t.sgrid.zeta_max)
                                : t.sgrid.zeta_max;
  if (zeta <= row.zeta_a || zeta >= hi || s <= row.zeta_a || s >= hi)
    throw std::domain_error("kernel_weights: arguments outside the allowed region");

  const double psi_z = t.psi_at(row_index, zeta);
  const double psi_s = t.psi_at(row_index, s);
  const double mus = t.mu(s, row.eps);

  KernelPair k;
  if (!row.trapped) {
    // theta(zeta_a, zeta) theta(zeta_a, s) mu(s) plus the upstream part.
    k.k_plus = std::exp(-psi_z - psi_s) * mus;
    if (s < zeta) k.k_plus += std::exp(psi_s - psi_z) * mus;
    if (s > zeta) k.k_minus = std::exp(psi_z - psi_s) * mus;
  } else {
    const double psi_b = row.psi_end;
    const double denom_orbit = -std::expm1(-2.0 * psi_b);
    const double wa = mus * (std::exp(-psi_s) + std::exp(psi_s - 2.0 * psi_b)) / denom_orbit;
    const double wb = mus * (std::exp(psi_s - psi_b) + std::exp(-psi_s - psi_b)) / denom_orbit;
    k.k_plus = std::exp(-psi_z) * wa;
    if (s < zeta) k.k_plus += std::exp(psi_s - psi_z) * mus;
    k.k_minus = std::exp(psi_z - psi_b) * wb;
    if (s > zeta) k.k_minus += std::exp(psi_z - psi_s) * mus;
  }
  return k;
}

double optical_depth_to_infinity(const Potential& p, const RelaxationModel& r,
                                 double eps, const TailPolicy& tail) {
  if (!(eps > 0.0)) throw std::domain_error("optical_depth_to_infinity: eps must be positive");
  const double za = p.zeta_a(eps);
  CellContext c{&p, &r, eps, za, kInf, std::abs(p.slope(za)), 0.0};

  double acc = 0.0;
  const double inner_end = za + 2.0;
  const int nu = 24;
  const double u_end = std::sqrt(inner_end - za);
  for (int i = 0; i < nu; ++i) {
    const double ua = u_end * double(i) / nu;
    const double ub = u_end * double(i + 1) / nu;
    acc += gauss_panel(
        [&](double u) { return 2.0 * u * mu_guarded(c, za + u * u, u * u, -1.0); },
        ua, ub);
  }
  const auto pts = log_mesh(inner_end, tail.zeta_far, 64);
  for (size_t i = 0; i + 1 < pts.size(); ++i) acc += depth_plain(c, pts[i], pts[i + 1]);
  acc += r.tail_integral_from(tail.zeta_far) / std::sqrt(2.0 * eps);
  return acc;
}

}  // namespace physisorb
