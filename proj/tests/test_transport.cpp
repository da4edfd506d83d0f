#include <doctest.h>

#include <cmath>
#include <random>

#include "physisorb/quadrature.hpp"
#include "physisorb/transport.hpp"

using namespace physisorb;

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143268;

OpticalDepthTable small_table(PotentialKind kind = PotentialKind::LJ9_3,
                              int n_eps = 48, int n_zeta = 96,
                              double zeta_max = 30.0) {
  Potential p(kind, 1.0);
  RelaxationModel r = RelaxationModel::algebraic(1.0, 1.0, 4.0);
  GridSpec spec;
  spec.n_eps = n_eps;
  spec.n_zeta = n_zeta;
  spec.eps_max = 8.0;
  spec.zeta_max = zeta_max;
  auto [eg, sg] = build_grids_unchecked(p, spec);
  return build_optical_depth(p, r, eg, sg);
}

Eigen::ArrayXd maxwellian_incident(const EnergyGrid& eg) {
  return incident_values(
      eg, [](double cz) { return std::exp(-0.5 * cz * cz) * kInvSqrt2Pi; });
}

}  // namespace

TEST_CASE("theta is exactly multiplicative between nodes and one at zero separation") {
  const OpticalDepthTable t = small_table();
  const RowTable& row = t.rows[t.egrid.size() - 5];
  REQUIRE(row.count > 10);
  CHECK(t.theta_nodes(t.egrid.size() - 5, 3, 3) == 1.0);
  const double ab = t.theta_nodes(t.egrid.size() - 5, 1, 5);
  const double bc = t.theta_nodes(t.egrid.size() - 5, 5, 9);
  const double ac = t.theta_nodes(t.egrid.size() - 5, 1, 9);
  CHECK(ab * bc == doctest::Approx(ac).epsilon(1e-14));
  CHECK(ab > 0.0);
  CHECK(ab < 1.0);
}

TEST_CASE("flat-region attenuation matches the closed form") {
  // Far from the wall W is negligible; with a nearly constant tau the
  // attenuation over a unit distance is exp(-1/sqrt(2 eps)).
  Potential p(PotentialKind::LJ9_3, 1.0);
  RelaxationModel r = RelaxationModel::algebraic(1.0, 1e-12, 4.0);  // tau ~ 1
  GridSpec spec;
  spec.n_eps = 48;
  spec.n_zeta = 512;
  spec.eps_max = 8.0;
  spec.zeta_max = 400.0;
  auto [eg, sg] = build_grids_unchecked(p, spec);
  const OpticalDepthTable t = build_optical_depth(p, r, eg, sg);

  // pick a free row with eps near 0.5 and masters near 300 and 301
  int j = eg.i_zero_plus;
  while (j < eg.size() - 1 && eg.nodes[j] < 0.5) ++j;
  const RowTable& row = t.rows[j];
  const int i1 = sg.nearest(300.0), i2 = sg.nearest(320.0);
  const double dz = sg.masters[i2] - sg.masters[i1];
  const double expected = std::exp(-dz / std::sqrt(2.0 * row.eps));
  const double got = t.theta_nodes(j, i1 - row.first, i2 - row.first);
  CHECK(got == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("allowed region: every row node satisfies eps >= W") {
  const OpticalDepthTable t = small_table();
  for (const auto& row : t.rows) {
    for (int i = 0; i < row.count; ++i) {
      const double w = t.w_m[row.first + i];
      CHECK(row.eps - w >= -1e-12);
    }
    if (row.count > 0) {
      CHECK(t.sgrid.masters[row.first] >= row.zeta_a - 1e-12);
      if (row.trapped && !row.zeta_b_truncated)
        CHECK(t.sgrid.masters[row.last()] <= row.zeta_b + 1e-12);
    }
  }
}

TEST_CASE("cumulative optical depth is nondecreasing along each row") {
  const OpticalDepthTable t = small_table();
  for (const auto& row : t.rows) {
    for (int i = 1; i < row.count; ++i) CHECK(row.psi[i] >= row.psi[i - 1]);
    CHECK(row.psi_end >= (row.count ? row.psi[row.count - 1] : 0.0));
  }
}

TEST_CASE("homogeneous problem stays zero") {
  const OpticalDepthTable t = small_table();
  const Eigen::ArrayXd zero_n = Eigen::ArrayXd::Zero(t.sgrid.size());
  const Eigen::ArrayXd zero_f = Eigen::ArrayXd::Zero(t.egrid.size());
  const SweepResult s = sweep(t, zero_n, zero_f);
  CHECK(s.density.abs().maxCoeff() == 0.0);
  for (int j = 0; j < t.egrid.size(); ++j) {
    if (t.rows[j].count == 0) continue;
    CHECK(s.field.fplus[j].abs().maxCoeff() == 0.0);
    CHECK(s.field.fminus[j].abs().maxCoeff() == 0.0);
  }
}

TEST_CASE("zero source: F- is the attenuated incident value, trapped rows stay empty") {
  const OpticalDepthTable t = small_table();
  const Eigen::ArrayXd zero_n = Eigen::ArrayXd::Zero(t.sgrid.size());
  const Eigen::ArrayXd finf = maxwellian_incident(t.egrid);
  const SweepResult s = sweep(t, zero_n, finf);
  for (int j = 0; j < t.egrid.size(); ++j) {
    const RowTable& row = t.rows[j];
    if (row.count == 0) continue;
    if (t.egrid.trapped(j)) {
      CHECK(s.field.fplus[j].abs().maxCoeff() == 0.0);
      CHECK(s.field.fminus[j].abs().maxCoeff() == 0.0);
    } else {
      for (int i = 0; i < row.count; ++i) {
        const double theta_inf = std::exp(-(row.psi_end - row.psi[i]));
        CHECK(s.field.fminus[j][i] ==
              doctest::Approx(theta_inf * finf[j]).epsilon(1e-13));
      }
      // and F+ carries the doubly attenuated turning value
      const double expected0 =
          std::exp(-(row.psi_end + row.psi[0])) * finf[j];
      CHECK(s.field.fplus[j][0] == doctest::Approx(expected0).epsilon(1e-13));
    }
  }
}

TEST_CASE("the wall Maxwellian is an exact fixed point of the sweep") {
  for (auto kind : {PotentialKind::LJ9_3, PotentialKind::LJ12_6}) {
    const OpticalDepthTable t = small_table(kind);
    const Eigen::ArrayXd n_eq = (-t.w_m).exp();
    const Eigen::ArrayXd finf = maxwellian_incident(t.egrid);
    const SweepResult s = sweep(t, n_eq, finf);
    for (int j = 0; j < t.egrid.size(); ++j) {
      const RowTable& row = t.rows[j];
      if (row.count == 0) continue;
      const double expect = std::exp(-row.eps) * kInvSqrt2Pi;
      for (int i = 0; i < row.count; ++i) {
        CHECK(s.field.fplus[j][i] == doctest::Approx(expect).epsilon(1e-13));
        CHECK(s.field.fminus[j][i] == doctest::Approx(expect).epsilon(1e-13));
      }
    }
    for (int m = 0; m < t.sgrid.size(); ++m)
      CHECK(s.density[m] == doctest::Approx(n_eq[m]).epsilon(1e-12));
    CHECK(s.balance.abs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("turning-point continuity and closure consistency") {
  const OpticalDepthTable t = small_table();
  // a generic positive source
  Eigen::ArrayXd n(t.sgrid.size());
  for (int m = 0; m < t.sgrid.size(); ++m)
    n[m] = std::exp(-t.w_m[m]) * (1.0 + 0.3 * std::sin(3.0 * t.sgrid.masters[m]));
  const SweepResult s = sweep(t, n, maxwellian_incident(t.egrid));
  for (int j = 0; j < t.egrid.size(); ++j) {
    const RowTable& row = t.rows[j];
    if (row.count == 0) continue;
    const auto& fp = s.field.fplus[j];
    const auto& fm = s.field.fminus[j];
    const double g0 = n[row.first] * row.maxw[0];
    const double gl = n[row.last()] * row.maxw[row.count - 1];
    // propagate back through the birth cell: must land on the turning value
    const double ta_back = row.att_birth * fm[0] + (1.0 - row.att_birth) * g0;
    CHECK(ta_back == doctest::Approx(s.field.turn_a[j]).epsilon(1e-12));
    if (row.trapped) {
      // forward through the death cell: must land on the outer turning value
      const double tb_fwd =
          row.att_death * fp[row.count - 1] + (1.0 - row.att_death) * gl;
      CHECK(tb_fwd == doctest::Approx(s.field.turn_b[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("sweep monotonicity in the source and the incident data") {
  const OpticalDepthTable t = small_table();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::ArrayXd n0(t.sgrid.size()), extra(t.sgrid.size());
  for (int m = 0; m < t.sgrid.size(); ++m) {
    n0[m] = u(rng) * std::exp(-t.w_m[m]);
    extra[m] = 0.5 * u(rng);
  }
  const Eigen::ArrayXd n1 = n0 + extra;
  const Eigen::ArrayXd finf = maxwellian_incident(t.egrid);
  const SweepResult s0 = sweep(t, n0, finf);
  const SweepResult s1 = sweep(t, n1, finf);
  for (int j = 0; j < t.egrid.size(); ++j) {
    if (t.rows[j].count == 0) continue;
    CHECK((s1.field.fplus[j] - s0.field.fplus[j]).minCoeff() >= -1e-14);
    CHECK((s1.field.fminus[j] - s0.field.fminus[j]).minCoeff() >= -1e-14);
  }
  CHECK((s1.density - s0.density).minCoeff() >= -1e-14);
}

TEST_CASE("the A e^{-eps} envelope is preserved by one sweep") {
  const OpticalDepthTable t = small_table();
  const double A = 1.8;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::ArrayXd n(t.sgrid.size());
  for (int m = 0; m < t.sgrid.size(); ++m) n[m] = A * u(rng) * std::exp(-t.w_m[m]);
  Eigen::ArrayXd finf(t.egrid.size());
  for (int j = 0; j < t.egrid.size(); ++j)
    finf[j] = A * std::exp(-t.egrid.nodes[j]) * kInvSqrt2Pi *
              (t.egrid.trapped(j) ? 0.0 : u(rng));
  const SweepResult s = sweep(t, n, finf);
  for (int j = 0; j < t.egrid.size(); ++j) {
    const RowTable& row = t.rows[j];
    if (row.count == 0) continue;
    const double cap = A * std::exp(-row.eps) * kInvSqrt2Pi * (1.0 + 1e-13);
    CHECK(s.field.fplus[j].maxCoeff() <= cap);
    CHECK(s.field.fminus[j].maxCoeff() <= cap);
  }
  const Eigen::ArrayXd cap_n = A * (-t.w_m).exp() * (1.0 + 1e-13);
  CHECK((s.density - cap_n).maxCoeff() <= 0.0);
}

TEST_CASE("negative source violates the sweep contract") {
  const OpticalDepthTable t = small_table();
  Eigen::ArrayXd n = Eigen::ArrayXd::Zero(t.sgrid.size());
  n[3] = -1e-9;
  CHECK_THROWS_AS(sweep(t, n, Eigen::ArrayXd::Zero(t.egrid.size())),
                  std::invalid_argument);
}

TEST_CASE("sweep equals the kernel-form evaluation on a 16x16 grid") {
  // Independent evaluation of (Fpm): per node, chain the attenuation factors
  // and product-integration moments directly from the table's optical depths
  // instead of running the recursive passes.
  Potential p(PotentialKind::LJ9_3, 1.0);
  RelaxationModel r = RelaxationModel::algebraic(1.0, 1.0, 4.0);
  GridSpec spec;
  spec.n_eps = 16;
  spec.n_zeta = 16;
  spec.eps_max = 8.0;
  spec.zeta_max = 30.0;
  auto [eg, sg] = build_grids_unchecked(p, spec);
  const OpticalDepthTable t = build_optical_depth(p, r, eg, sg);

  Eigen::ArrayXd n(sg.size());
  for (int m = 0; m < sg.size(); ++m)
    n[m] = std::exp(-t.w_m[m]) * (1.0 + 0.4 * std::cos(2.0 * sg.masters[m]));
  const Eigen::ArrayXd finf = maxwellian_incident(eg);
  const SweepResult s = sweep(t, n, finf);

  for (int j = 0; j < eg.size(); ++j) {
    const RowTable& row = t.rows[j];
    if (row.count == 0) continue;
    Eigen::ArrayXd g(row.count);
    for (int i = 0; i < row.count; ++i) g[i] = n[row.first + i] * row.maxw[i];

    // source integrals against e^{-psi} from the inner turning point
    auto downwind = [&](int m_lo, int m_hi) {
      // int_{psi_lo}^{psi_hi} e^{-(psi - psi_lo)} g dpsi via the cell moments
      double acc = 0.0;
      for (int i = m_lo; i < m_hi; ++i) {
        const ExpMoments em = exp_moments(row.dpsi[i]);
        acc += std::exp(-(row.psi[i] - row.psi[m_lo])) *
               (g[i] * em.c0 + g[i + 1] * em.c1);
      }
      return acc;
    };
    auto upwind = [&](int m_lo, int m_hi) {
      // int e^{-(psi_hi - psi)} g dpsi
      double acc = 0.0;
      for (int i = m_lo; i < m_hi; ++i) {
        const ExpMoments em = exp_moments(row.dpsi[i]);
        acc += std::exp(-(row.psi[m_hi] - row.psi[i + 1])) *
               (g[i] * em.c1 + g[i + 1] * em.c0);
      }
      return acc;
    };

    if (!t.egrid.trapped(j)) {
      for (int idx : {0, row.count / 2, row.count - 1}) {
        // F-(idx) = theta(z, inf) F_inf + int_z^inf theta(z, s) mu g ds
        const double att_up =
            std::exp(-(row.psi[row.count - 1] - row.psi[idx])) * row.att_tail;
        double fm = att_up * finf[j];
        fm += downwind(idx, row.count - 1);
        fm += std::exp(-(row.psi[row.count - 1] - row.psi[idx])) *
              (1.0 - row.att_tail) * g[row.count - 1];
        CHECK(s.field.fminus[j][idx] == doctest::Approx(fm).epsilon(1e-10));

        // F+(idx) = theta(za, z)[F-(za)] + int_za^z theta(s, z) mu g ds
        const double att0 = std::exp(-row.psi[idx]);
        const double fma = row.att_birth * s.field.fminus[j][0] +
                           (1.0 - row.att_birth) * g[0];
        double fpv = att0 * fma;  // attenuated from zeta_a with psi measured from za
        fpv += std::exp(-(row.psi[idx] - row.psi[0])) * (1.0 - row.att_birth) * g[0];
        fpv += upwind(0, idx);
        CHECK(s.field.fplus[j][idx] == doctest::Approx(fpv).epsilon(1e-10));
      }
    } else {
      // trapped: check the closure against explicit cosh/sinh weights
      const double psi_b = row.psi_end;
      const double denom = -std::expm1(-2.0 * psi_b);
      double jm = g[0] * (-std::expm1(-row.dpsi_birth));
      double jp = g[0] * std::exp(row.dpsi_birth - psi_b) *
                  (-std::expm1(-row.dpsi_birth));
      for (int i = 0; i + 1 < row.count; ++i) {
        const ExpMoments em = exp_moments(row.dpsi[i]);
        jm += std::exp(-row.psi[i]) * (g[i] * em.c0 + g[i + 1] * em.c1);
        const ExpMomentsPos ep = exp_moments_pos(row.dpsi[i]);
        jp += std::exp(row.psi[i] - psi_b) * (g[i] * ep.d0 + g[i + 1] * ep.d1);
      }
      jm += std::exp(-row.psi[row.count - 1]) * g[row.count - 1] *
            (-std::expm1(-row.dpsi_death));
      jp += g[row.count - 1] * (-std::expm1(-row.dpsi_death));
      const double ta = (jm + std::exp(-psi_b) * jp) / denom;
      const double tb = (jp + std::exp(-psi_b) * jm) / denom;
      CHECK(s.field.turn_a[j] == doctest::Approx(ta).epsilon(1e-10));
      CHECK(s.field.turn_b[j] == doctest::Approx(tb).epsilon(1e-10));
    }
  }
}

TEST_CASE("kernel weights: domain errors and positivity") {
  const OpticalDepthTable t = small_table(PotentialKind::LJ9_3, 24, 32);
  int j = t.egrid.i_zero_plus + 5;
  const RowTable& row = t.rows[j];
  CHECK_THROWS_AS(kernel_weights(t, j, row.zeta_a - 0.01, row.zeta_a + 0.5),
                  std::domain_error);
  CHECK_THROWS_AS(kernel_weights(t, j, row.zeta_a + 0.5, t.sgrid.zeta_max + 1.0),
                  std::domain_error);
  const KernelPair k =
      kernel_weights(t, j, row.zeta_a + 0.4, row.zeta_a + 0.9);
  CHECK(k.k_plus >= 0.0);
  CHECK(k.k_minus >= 0.0);
}
