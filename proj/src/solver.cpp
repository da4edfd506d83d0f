#include "physisorb/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "physisorb/moments.hpp"

namespace physisorb {

namespace {
constexpr double kInvSqrt2Pi = 0.39894228040143268;
}

double weighted_l1(const OpticalDepthTable& t, const Eigen::ArrayXd& dn) {
  const auto& M = t.sgrid.masters;
  const int nm = t.sgrid.size();
  Eigen::ArrayXd f = dn.abs() / t.tau_m;
  double acc = 0.0;
  for (int m = 0; m + 1 < nm; ++m)
    acc += 0.5 * (f[m] + f[m + 1]) * (M[m + 1] - M[m]);
  return acc;
}

Eigen::ArrayXd compute_density(const OpticalDepthTable& table,
                               const DistributionField& field) {
  return density_velocity_rule(table, field);
}

RateFit fit_rate(const std::vector<double>& increments, int k_min) {
  std::vector<std::pair<double, double>> pts;  // (k, log inc)
  for (size_t i = 0; i < increments.size(); ++i) {
    const int k = static_cast<int>(i) + 1;
    if (k < k_min) continue;
    if (!(increments[i] > 0.0))
      throw std::runtime_error(
          "fit_rate: non-positive increment in the fit range (monotonicity breach)");
    pts.emplace_back(double(k), std::log(increments[i]));
  }
  if (pts.size() < 10)
    throw std::runtime_error("fit_rate: need at least 10 increments past k_min");
  double sk = 0, sy = 0, skk = 0, sky = 0;
  for (auto& [k, y] : pts) {
    sk += k;
    sy += y;
    skk += k * k;
    sky += k * y;
  }
  const double n = double(pts.size());
  const double slope = (n * sky - sk * sy) / (n * skk - sk * sk);
  RateFit fit;
  fit.a = -slope;
  fit.b = (sy - slope * sk) / n;
  return fit;
}

std::pair<double, double> contraction_bound(const Potential& p,
                                            const RelaxationModel& r) {
  const double ell = r.tail_integral();
  const double K = std::sqrt(2.0) * p.zeta_min() / r.value(0.0) + ell / std::sqrt(2.0);
  const double L =
      1.0 - std::exp(-K) * std::erfc(std::sqrt(std::abs(p.w_min()) + 1.0));
  return {K, L};
}

ScenarioResult solve(std::shared_ptr<const OpticalDepthTable> table,
                     const ShiftedMaxwellian& input, const SolverParams& params) {
  const OpticalDepthTable& t = *table;
  const int nm = t.sgrid.size();

  ScenarioResult res;
  res.table = table;
  res.input = input;
  res.f_inf = incident_values(t.egrid, [&](double cz) { return input(cz); });

  IterationReport& rep = res.report;
  rep.probe_positions.assign(t.sgrid.probes.begin(), t.sgrid.probes.end());
  rep.envelope_constant = input.envelope_constant();
  rep.bound_checked = std::isfinite(rep.envelope_constant);
  const auto [K, L] = contraction_bound(t.pot, t.relax);
  rep.contraction_k = K;
  rep.contraction_l = L;

  const int nrows = t.egrid.size();
  Eigen::ArrayXd n(nm);
  Eigen::ArrayXd tb = Eigen::ArrayXd::Zero(nrows);
  if (params.start_from_equilibrium) {
    n = params.equilibrium_beta * (-t.w_m).exp();
    for (int j = 0; j <= t.egrid.i_zero_minus; ++j)
      tb[j] = params.equilibrium_beta * std::exp(-t.egrid.nodes[j]) * kInvSqrt2Pi;
  } else {
    n.setZero();
  }
  std::vector<double> probe_prev(t.sgrid.probe_idx.size());
  for (size_t q = 0; q < t.sgrid.probe_idx.size(); ++q)
    probe_prev[q] = n[t.sgrid.probe_idx[q]];

  SweepResult s;
  const double mono_slack = 1e-12;
  for (int k = 1; k <= params.k_max; ++k) {
    s = sweep(t, n, res.f_inf, params.threads, &tb);
    s.field.iteration = k;
    for (int j = 0; j <= t.egrid.i_zero_minus; ++j)
      if (std::isfinite(s.field.turn_b[j])) tb[j] = s.field.turn_b[j];
    const Eigen::ArrayXd dn = s.density - n;
    const double inc = weighted_l1(t, dn);
    rep.increments.push_back(inc);

    if (!params.start_from_equilibrium) {
      const double scale = std::max(1.0, s.density.maxCoeff());
      if (dn.minCoeff() < -10.0 * mono_slack * scale) ++rep.monotonicity_violations;
    }
    if (rep.bound_checked) {
      const Eigen::ArrayXd cap = rep.envelope_constant * (-t.w_m).exp();
      if ((s.density - cap).maxCoeff() > 1e-9 * rep.envelope_constant)
        ++rep.bound_violations;
    }

    std::vector<double> probes(t.sgrid.probe_idx.size());
    for (size_t q = 0; q < t.sgrid.probe_idx.size(); ++q)
      probes[q] = s.density[t.sgrid.probe_idx[q]];
    rep.probe_history.push_back(probes);

    n = s.density;
    rep.iterations = k;
    rep.final_increment = inc;
    if (inc <= params.tol) {
      rep.converged = true;
      break;
    }
  }

  res.field = std::move(s.field);
  res.density = std::move(s.density);
  res.balance = std::move(s.balance);

  // Rate fits from the pointwise probe increments (paper's definition).
  const int iz = t.sgrid.index_of_zeta_min;
  int zmin_probe = -1;
  for (size_t q = 0; q < t.sgrid.probe_idx.size(); ++q)
    if (t.sgrid.probe_idx[q] == iz) zmin_probe = static_cast<int>(q);

  rep.probe_rates.assign(t.sgrid.probe_idx.size(), 0.0);
  double rate_min = 0.0, rate_max = 0.0, rate_sum = 0.0;
  int rate_count = 0;
  for (size_t q = 0; q < t.sgrid.probe_idx.size(); ++q) {
    std::vector<double> incs(rep.probe_history.size());
    for (size_t k = 0; k < rep.probe_history.size(); ++k) {
      const double prev = k == 0 ? probe_prev[q] : rep.probe_history[k - 1][q];
      incs[k] = rep.probe_history[k][q] - prev;
    }
    try {
      const RateFit f = fit_rate(incs, params.k_min_fit);
      rep.probe_rates[q] = f.a;
      if (static_cast<int>(q) == zmin_probe) rep.fit = f;
      rate_min = rate_count == 0 ? f.a : std::min(rate_min, f.a);
      rate_max = rate_count == 0 ? f.a : std::max(rate_max, f.a);
      rate_sum += f.a;
      ++rate_count;
    } catch (const std::exception& e) {
      if (rep.fit_error.empty()) rep.fit_error = e.what();
    }
  }
  if (rate_count > 0 && rate_sum > 0.0)
    rep.rate_spread = (rate_max - rate_min) / (rate_sum / rate_count);
  return res;
}

}  // namespace physisorb
