#include "physisorb/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "physisorb/quadrature.hpp"

namespace physisorb {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInvSqrt2Pi = 0.39894228040143268;

// Interpolation of a per-row turning-value array in eps over an index
// block, skipping inert rows.  Log-linear where both neighbors are
// positive (the values carry the e^{-eps} Maxwellian factor), linear
// otherwise.
double interp_turning(const EnergyGrid& eg, const std::vector<RowTable>& rows,
                      const Eigen::ArrayXd& values, int jlo, int jhi, double eps) {
  int prev = -1;
  for (int j = jlo; j <= jhi; ++j) {
    if (rows[j].count == 0 || !std::isfinite(values[j])) continue;
    if (eg.nodes[j] >= eps) {
      if (prev < 0) return values[j];
      const double e0 = eg.nodes[prev], e1 = eg.nodes[j];
      if (e1 <= e0) return values[j];
      const double s = (eps - e0) / (e1 - e0);
      if (values[prev] > 0.0 && values[j] > 0.0)
        return std::exp((1.0 - s) * std::log(values[prev]) +
                        s * std::log(values[j]));
      return (1.0 - s) * values[prev] + s * values[j];
    }
    prev = j;
  }
  return prev >= 0 ? values[prev] : 0.0;
}

// F(zeta_m, c_z = 0), the turning value of the orbit whose turning point is
// the master itself.
double anchor_value(const OpticalDepthTable& t, const DistributionField& f, int m) {
  const double w = t.w_m[m];
  const EnergyGrid& eg = t.egrid;
  if (w < 0.0) {
    const bool inner = t.sgrid.masters[m] <= t.pot.zeta_min();
    const auto& vals = inner ? f.turn_a : f.turn_b;
    return interp_turning(eg, t.rows, vals, 0, eg.i_zero_minus, w);
  }
  return interp_turning(eg, t.rows, f.turn_a, eg.i_zero_plus, eg.size() - 1, w);
}

struct SideSamples {
  std::vector<double> u, fp, fm;
};

// Velocity-coordinate samples at a master, split at the eps = 0 double node.
struct MasterSamples {
  SideSamples trapped, free;
  double anchor = 0.0;  // one-sided F at u = 0 (both branches coincide)
  double w = 0.0;
};

void push_sample(SideSamples& s, double u, double fp, double fm) {
  if (!s.u.empty() && u - s.u.back() < 1e-12 * std::max(1.0, u)) return;
  s.u.push_back(u);
  s.fp.push_back(fp);
  s.fm.push_back(fm);
}

MasterSamples gather_at(const OpticalDepthTable& t, const DistributionField& f, int m) {
  MasterSamples g;
  g.w = t.w_m[m];
  g.anchor = anchor_value(t, f, m);
  const EnergyGrid& eg = t.egrid;
  if (g.w < 0.0 && t.first_trapped_row[m] >= 0) {
    for (int j = t.first_trapped_row[m]; j <= eg.i_zero_minus; ++j) {
      const RowTable& row = t.rows[j];
      if (row.count == 0 || m < row.first || m > row.last()) continue;
      const double u = std::sqrt(std::max(0.0, 2.0 * (row.eps - g.w)));
      const int i = m - row.first;
      push_sample(g.trapped, u, f.fplus[j][i], f.fminus[j][i]);
    }
  }
  for (int j = std::max(t.first_free_row[m], eg.i_zero_plus); j < eg.size(); ++j) {
    const RowTable& row = t.rows[j];
    if (row.count == 0 || m < row.first || m > row.last()) continue;
    const double u = std::sqrt(std::max(0.0, 2.0 * (row.eps - g.w)));
    const int i = m - row.first;
    push_sample(g.free, u, f.fplus[j][i], f.fminus[j][i]);
  }
  return g;
}

struct SideMoments {
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
};

// Integrals over one side from monotone-cubic interpolants of f = F+ + F-
// and d = F+ - F-.  `lead` supplies the value pair at the left edge (the
// u = 0 anchor for the trapped side).
SideMoments side_moments(const SideSamples& s, bool with_anchor, double anchor) {
  SideMoments out;
  std::vector<double> u, fsum, fdif;
  if (with_anchor) {
    u.push_back(0.0);
    fsum.push_back(2.0 * anchor);
    fdif.push_back(0.0);
  }
  for (size_t i = 0; i < s.u.size(); ++i) {
    if (!u.empty() && s.u[i] - u.back() < 1e-14) continue;
    u.push_back(s.u[i]);
    fsum.push_back(s.fp[i] + s.fm[i]);
    fdif.push_back(s.fp[i] - s.fm[i]);
  }
  if (u.size() < 2) return out;
  Eigen::ArrayXd ua = Eigen::Map<Eigen::ArrayXd>(u.data(), u.size());
  Eigen::ArrayXd fa = Eigen::Map<Eigen::ArrayXd>(fsum.data(), fsum.size());
  Eigen::ArrayXd da = Eigen::Map<Eigen::ArrayXd>(fdif.data(), fdif.size());
  const Pchip ps(ua, fa);
  const Pchip pd(ua, da);
  out.m0 = ps.integral();
  out.m2 = ps.integral_u2();
  out.m1 = pd.integral_u1();
  return out;
}

// Maxwellian model tail beyond eps_max: f(eps) ~ f_L e^{-(eps - eps_max)}.
void add_tail(SideMoments& acc, double u_last, double f_last, double d_last) {
  const double ex = std::exp(0.5 * u_last * u_last) *
                    std::sqrt(M_PI / 2.0) * std::erfc(u_last / std::sqrt(2.0));
  acc.m0 += f_last * ex;
  acc.m1 += d_last;
  acc.m2 += f_last * (u_last + ex);
}

SideMoments total_moments(const MasterSamples& g) {
  SideMoments acc;
  const bool has_trapped = !g.trapped.u.empty();
  if (has_trapped) {
    const SideMoments sm = side_moments(g.trapped, true, g.anchor);
    acc.m0 += sm.m0;
    acc.m1 += sm.m1;
    acc.m2 += sm.m2;
  }
  const SideMoments sf = side_moments(g.free, !has_trapped, g.anchor);
  acc.m0 += sf.m0;
  acc.m1 += sf.m1;
  acc.m2 += sf.m2;
  if (!g.free.u.empty()) {
    const size_t l = g.free.u.size() - 1;
    add_tail(acc, g.free.u[l], g.free.fp[l] + g.free.fm[l],
             g.free.fp[l] - g.free.fm[l]);
  }
  return acc;
}

// The same pipeline applied to the wall Maxwellian, whose moments are both
// exactly e^{-W}; normalizing against it makes the rule exact at equilibrium.
MasterSamples maxwellian_samples(const MasterSamples& g) {
  MasterSamples c = g;
  c.anchor = std::exp(-c.w) * kInvSqrt2Pi;
  auto fill = [&](SideSamples& s) {
    for (size_t i = 0; i < s.u.size(); ++i) {
      const double eps = 0.5 * s.u[i] * s.u[i] + c.w;
      s.fp[i] = s.fm[i] = std::exp(-eps) * kInvSqrt2Pi;
    }
  };
  fill(c.trapped);
  fill(c.free);
  return c;
}

}  // namespace

VelocityMoments velocity_moments_at(const OpticalDepthTable& t,
                                    const DistributionField& f, int m) {
  const MasterSamples g = gather_at(t, f, m);
  const SideMoments raw = total_moments(g);
  const MasterSamples gc = maxwellian_samples(g);
  const SideMoments cal = total_moments(gc);
  VelocityMoments out;
  out.m0 = raw.m0;
  out.m1 = raw.m1;
  out.m2 = raw.m2;
  const double exact = std::exp(-g.w);
  out.cal0 = cal.m0 > 0.0 ? exact / cal.m0 : 1.0;
  out.cal2 = cal.m2 > 0.0 ? exact / cal.m2 : 1.0;
  return out;
}

Eigen::ArrayXd density_velocity_rule(const OpticalDepthTable& t,
                                     const DistributionField& f) {
  const int nm = t.sgrid.size();
  Eigen::ArrayXd n(nm);
  for (int m = 0; m < nm; ++m) {
    const VelocityMoments vm = velocity_moments_at(t, f, m);
    n[m] = vm.m0 * vm.cal0;
  }
  return n;
}

MomentProfile compute_moments(const OpticalDepthTable& t, const DistributionField& f,
                              const Eigen::ArrayXd& density,
                              const Eigen::ArrayXd& balance) {
  const int nm = t.sgrid.size();
  MomentProfile mp;
  mp.zeta = t.sgrid.masters;
  mp.n = density;
  mp.flux.resize(nm);
  mp.t_perp = Eigen::ArrayXd::Constant(nm, kNaN);

  // Node flux = mean of the two adjacent interface fluxes; interfaces are
  // prefix sums of the balance vector (zero at the fixed point).
  double prefix = 0.0;
  for (int m = 0; m < nm; ++m) {
    mp.flux[m] = prefix + 0.5 * balance[m];
    prefix += balance[m];
  }

  for (int m = 0; m < nm; ++m) {
    if (t.sgrid.masters[m] < 1.0) continue;
    const VelocityMoments vm = velocity_moments_at(t, f, m);
    const double n_u = vm.m0 * vm.cal0;
    if (n_u > 0.0) mp.t_perp[m] = vm.m2 * vm.cal2 / n_u;
  }

  mp.n_floor = std::exp(-t.egrid.eps_max) * mp.n.maxCoeff();
  return mp;
}

namespace {

// One-sided evaluation of a branch at a single master.
double eval_branch_at_master(const OpticalDepthTable& t, const DistributionField& f,
                             int m, double eps, bool plus) {
  const MasterSamples g = gather_at(t, f, m);
  const double w = g.w;
  if (eps < w) return 0.0;
  const double u = std::sqrt(std::max(0.0, 2.0 * (eps - w)));
  const bool trapped_side = eps < 0.0;

  const SideSamples& s = trapped_side ? g.trapped : g.free;
  std::vector<double> xs, ys;
  if (trapped_side || g.trapped.u.empty()) {
    xs.push_back(0.0);
    ys.push_back(g.anchor);
  }
  for (size_t i = 0; i < s.u.size(); ++i) {
    if (!xs.empty() && s.u[i] - xs.back() < 1e-14) continue;
    xs.push_back(s.u[i]);
    ys.push_back(plus ? s.fp[i] : s.fm[i]);
  }
  if (xs.empty()) return 0.0;
  if (xs.size() == 1) return ys[0];
  Eigen::ArrayXd ua = Eigen::Map<Eigen::ArrayXd>(xs.data(), xs.size());
  Eigen::ArrayXd ya = Eigen::Map<Eigen::ArrayXd>(ys.data(), ys.size());
  const Pchip p(ua, ya);
  if (u <= ua[0]) return ya[0];
  if (u >= ua[ua.size() - 1]) {
    // Maxwellian model decay beyond the last tabulated energy
    const double eps_last = 0.5 * ua[ua.size() - 1] * ua[ua.size() - 1] + w;
    return ys.back() * std::exp(-(eps - eps_last));
  }
  return p(u);
}

}  // namespace

double reconstruct_F(const OpticalDepthTable& t, const DistributionField& f,
                     double zeta, double cz) {
  const auto& M = t.sgrid.masters;
  const int nm = t.sgrid.size();
  const double zlo = M[0], zhi = M[nm - 1];
  const double z = std::clamp(zeta, zlo, zhi);
  const double eps = 0.5 * cz * cz + t.pot.value(z);
  const bool plus = cz >= 0.0;

  const double* it = std::lower_bound(M.data(), M.data() + nm, z);
  int m1 = std::clamp<int>(static_cast<int>(it - M.data()), 0, nm - 1);
  int m0 = std::max(0, m1 - 1);
  if (M[m1] == z || m1 == 0) m0 = m1;

  // On the repulsive flank a bracketing master can sit outside the allowed
  // region of this energy; evaluate one-sided from the covered neighbor.
  const bool cov0 = eps >= t.w_m[m0], cov1 = eps >= t.w_m[m1];
  if (!cov0 && !cov1) return 0.0;
  const double v1 = cov1 ? eval_branch_at_master(t, f, m1, eps, plus) : 0.0;
  if (m0 == m1 || !cov0) return std::max(0.0, v1);
  const double v0 = eval_branch_at_master(t, f, m0, eps, plus);
  if (!cov1) return std::max(0.0, v0);
  const double s = (z - M[m0]) / (M[m1] - M[m0]);
  return std::max(0.0, (1.0 - s) * v0 + s * v1);
}

namespace {

// Linear-in-zeta evaluation along one energy row.
double row_value_at(const OpticalDepthTable& t, const Eigen::ArrayXd& values,
                    const RowTable& row, double zeta) {
  const auto& M = t.sgrid.masters;
  const int lo = row.first, hi = row.last();
  if (zeta <= M[lo]) return values[0];
  if (zeta >= M[hi]) return values[row.count - 1];
  const double* it = std::upper_bound(M.data() + lo, M.data() + hi + 1, zeta);
  const int i = static_cast<int>(it - M.data()) - 1;
  const double s = (zeta - M[i]) / (M[i + 1] - M[i]);
  return (1.0 - s) * values[i - lo] + s * values[i - lo + 1];
}

}  // namespace

JumpSizes jump_sizes(const OpticalDepthTable& t, const DistributionField& f,
                     double zeta) {
  JumpSizes js;
  const int jm = t.egrid.i_zero_minus, jp = t.egrid.i_zero_plus;
  const RowTable& rm = t.rows[jm];
  const RowTable& rp = t.rows[jp];
  if (rm.count == 0 || rp.count == 0) return js;
  const auto& M = t.sgrid.masters;
  const double lo = std::max(M[rm.first], M[rp.first]);
  if (zeta < lo || zeta > std::min(M[rm.last()], M[rp.last()])) return js;
  js.minus_branch = std::abs(row_value_at(t, f.fminus[jm], rm, zeta) -
                             row_value_at(t, f.fminus[jp], rp, zeta));
  js.plus_branch = std::abs(row_value_at(t, f.fplus[jm], rm, zeta) -
                            row_value_at(t, f.fplus[jp], rp, zeta));
  return js;
}

std::vector<double> locate_discontinuity(const OpticalDepthTable& t,
                                         const DistributionField& f, double zeta,
                                         double jump_tol) {
  std::vector<double> out;
  if (zeta < t.pot.zeta_zero()) return out;  // the eps = 0 characteristic stops at 1
  const double w = t.pot.value(zeta);
  if (w >= 0.0) return out;
  const double u0 = std::sqrt(-2.0 * w);
  const JumpSizes js = jump_sizes(t, f, zeta);
  if (js.minus_branch > jump_tol) out.push_back(-u0);
  if (js.plus_branch > jump_tol) out.push_back(u0);
  return out;
}

VelocityCut velocity_cut(const OpticalDepthTable& t, const DistributionField& f,
                         double zeta, int n_samples, double cz_max) {
  VelocityCut cut;
  cut.zeta = zeta;
  cut.cz.resize(n_samples);
  cut.f.resize(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double cz = -cz_max + 2.0 * cz_max * double(i) / double(n_samples - 1);
    cut.cz[i] = cz;
    cut.f[i] = reconstruct_F(t, f, zeta, cz);
  }
  cut.jump_locations = locate_discontinuity(t, f, zeta);
  return cut;
}

}  // namespace physisorb
