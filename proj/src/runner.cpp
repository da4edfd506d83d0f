#include "physisorb/runner.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "physisorb/diagnostics.hpp"
#include "physisorb/moments.hpp"

namespace physisorb {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string num(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string short_num(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

void write_moments_csv(const fs::path& path, const MomentProfile& mp) {
  std::ofstream os(path);
  os << "zeta,n,flux,t_perp\n";
  for (Eigen::Index m = 0; m < mp.zeta.size(); ++m)
    os << num(mp.zeta[m]) << ',' << num(mp.n[m]) << ',' << num(mp.flux[m]) << ','
       << num(mp.t_perp[m]) << '\n';
}

void write_increments_csv(const fs::path& path, const IterationReport& rep) {
  std::ofstream os(path);
  os << "k,increment_l1";
  for (double p : rep.probe_positions) os << ",probe_" << short_num(p);
  os << '\n';
  for (size_t k = 0; k < rep.increments.size(); ++k) {
    os << (k + 1) << ',' << num(rep.increments[k]);
    for (double v : rep.probe_history[k]) os << ',' << num(v);
    os << '\n';
  }
}

void write_cut_csv(const fs::path& path, const VelocityCut& cut) {
  std::ofstream os(path);
  os << "# zeta=" << num(cut.zeta);
  if (!cut.jump_locations.empty()) {
    os << " jumps=";
    for (size_t i = 0; i < cut.jump_locations.size(); ++i)
      os << (i ? ";" : "") << num(cut.jump_locations[i]);
  }
  os << "\nc_z,F\n";
  for (Eigen::Index i = 0; i < cut.cz.size(); ++i)
    os << num(cut.cz[i]) << ',' << num(cut.f[i]) << '\n';
}

void write_outgoing_csv(const fs::path& path, const bc::OutgoingDistribution& o) {
  std::ofstream os(path);
  os << "# source="
     << (o.source == bc::OutgoingSource::FullSolve    ? "full"
         : o.source == bc::OutgoingSource::FirstModel ? "first"
                                                      : "second")
     << " flux_out=" << num(o.flux_out) << " flux_in=" << num(o.flux_in);
  if (o.source != bc::OutgoingSource::FullSolve) os << " beta=" << num(o.beta);
  os << "\nc_z,F\n";
  for (Eigen::Index i = 0; i < o.cz.size(); ++i)
    os << num(o.cz[i]) << ',' << num(o.f[i]) << '\n';
}

json json_finite(double x) {
  if (std::isfinite(x)) return x;
  return std::isnan(x) ? json("nan") : json(x > 0 ? "inf" : "-inf");
}

json outcome_json(const diagnostics::PropertyOutcome& o) {
  json j;
  j["name"] = o.name;
  j["status"] = o.status == diagnostics::Status::Pass   ? "pass"
                : o.status == diagnostics::Status::Fail ? "fail"
                                                        : "skipped";
  j["measured"] = json_finite(o.measured);
  j["threshold"] = o.threshold;
  if (!o.reason.empty()) j["reason"] = o.reason;
  return j;
}

Eigen::ArrayXd uniform_grid(double a, double b, int n) {
  Eigen::ArrayXd g(n);
  for (int i = 0; i < n; ++i) g[i] = a + (b - a) * double(i) / double(n - 1);
  return g;
}

}  // namespace

int run_scenario(const ScenarioConfig& cfg, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  AssembledScenario as = assemble(cfg);
  const OpticalDepthTable& table = *as.table;

  ScenarioResult res = solve(as.table, as.input, as.params);
  const MomentProfile mp = compute_moments(table, res.field, res.density, res.balance);

  fs::create_directories(cfg.out_dir);
  fs::create_directories(fs::path(cfg.out_dir) / "cuts");
  fs::create_directories(fs::path(cfg.out_dir) / "bc");

  write_moments_csv(fs::path(cfg.out_dir) / "moments.csv", mp);
  write_increments_csv(fs::path(cfg.out_dir) / "increments.csv", res.report);

  std::vector<double> cut_positions = cfg.cuts;
  if (cut_positions.empty())
    cut_positions = {1.05, as.pot.zeta_min(), 2.0, 0.5 * cfg.zeta_max};
  for (double z : cut_positions) {
    const VelocityCut cut = velocity_cut(table, res.field, z);
    write_cut_csv(fs::path(cfg.out_dir) / "cuts" /
                      ("cut_" + short_num(z) + ".csv"),
                  cut);
  }

  // Boundary-condition artifacts.
  const Eigen::ArrayXd czgrid = uniform_grid(0.02, 5.0, 250);
  const bc::BoundaryModel bm =
      bc::build_alpha(as.pot, as.relax, bc::default_alpha_grid(), table.sgrid.tail);
  double beta_first = 0.0;
  {
    const auto first = bc::apply_first_model(
        bm, [&](double c) { return as.input(c); }, czgrid);
    beta_first = first.beta;
    bc::save_boundary_model(fs::path(cfg.out_dir) / "bc" / "alpha.csv", bm,
                            beta_first, "first-iteration-flux-quadrature");
    write_outgoing_csv(fs::path(cfg.out_dir) / "bc" / "outgoing_first.csv", first);
  }
  {
    const auto second =
        bc::apply_second_model(table, as.input, czgrid, as.params.threads);
    write_outgoing_csv(fs::path(cfg.out_dir) / "bc" / "outgoing_second.csv", second);
  }
  if (res.report.converged) {
    const auto full = bc::outgoing_from_solution(res, czgrid);
    write_outgoing_csv(fs::path(cfg.out_dir) / "bc" / "outgoing_full.csv", full);
  }

  // Report.
  json rep;
  rep["scenario"]["preset"] = cfg.preset;
  rep["scenario"]["potential"] =
      cfg.potential == PotentialKind::LJ12_6 ? "lj12_6" : "lj9_3";
  rep["scenario"]["kappa"] = cfg.kappa;
  rep["scenario"]["relaxation"] =
      cfg.relaxation == RelaxationKind::Algebraic ? "algebraic" : "exponential";
  rep["scenario"]["kappa_tau"] = cfg.kappa_tau;
  rep["scenario"]["sigma"] = cfg.sigma;
  if (cfg.relaxation == RelaxationKind::Algebraic) rep["scenario"]["nu"] = cfg.nu;
  rep["scenario"]["t_inf"] = cfg.t_inf;
  rep["scenario"]["vz_inf"] = cfg.vz_inf;

  rep["grid"]["n_eps"] = cfg.n_eps;
  rep["grid"]["n_zeta"] = cfg.n_zeta;
  rep["grid"]["eps_max"] = cfg.eps_max;
  rep["grid"]["zeta_max"] = cfg.zeta_max;
  rep["grid"]["zeta_far"] = cfg.zeta_far;
  rep["grid"]["masters"] = table.sgrid.size();
  rep["grid"]["energy_rows"] = table.egrid.size();
  rep["grid"]["discretization_tol"] = cfg.discretization_tol;

  rep["solver"]["tol"] = cfg.tol;
  rep["solver"]["k_max"] = cfg.k_max;
  rep["solver"]["k_min_fit"] = cfg.k_min_fit;
  rep["solver"]["threads"] = cfg.threads;

  const IterationReport& r = res.report;
  rep["iterations"] = r.iterations;
  rep["converged"] = r.converged;
  rep["final_increment"] = r.final_increment;
  if (r.fit) {
    rep["fit"]["a"] = r.fit->a;
    rep["fit"]["b"] = r.fit->b;
  }
  if (!r.fit_error.empty()) rep["fit"]["error"] = r.fit_error;
  rep["fit"]["probe_positions"] = r.probe_positions;
  rep["fit"]["probe_rates"] = r.probe_rates;
  rep["fit"]["rate_spread"] = r.rate_spread;
  rep["theory"]["K"] = r.contraction_k;
  rep["theory"]["L_bound"] = r.contraction_l;
  if (r.fit) rep["theory"]["exp_minus_a"] = std::exp(-r.fit->a);
  rep["violations"]["monotonicity"] = r.monotonicity_violations;
  rep["violations"]["bound"] = r.bound_violations;
  rep["violations"]["bound_checked"] = r.bound_checked;
  rep["violations"]["envelope_constant"] = json_finite(r.envelope_constant);
  if (!r.bound_checked)
    rep["violations"]["bound_skip_reason"] =
        "envelope constant A is infinite for this incident distribution "
        "(T_inf > 1, or T_inf = 1 with drift): Lemma hypothesis not met";

  const int iz = table.sgrid.index_of_zeta_min;
  rep["density"]["n_at_zeta_min"] = res.density[iz];
  {
    const Eigen::ArrayXd n_u = compute_density(table, res.field);
    const double floor = std::exp(-cfg.eps_max) * res.density.maxCoeff();
    double mism = 0.0, eqerr = 0.0, fluxrel = 0.0;
    for (int m = 0; m < table.sgrid.size(); ++m) {
      const double scale = std::max(res.density[m], floor);
      mism = std::max(mism, std::abs(res.density[m] - n_u[m]) / scale);
      fluxrel = std::max(fluxrel, std::abs(mp.flux[m]) / scale);
      const double eq = std::exp(-table.w_m[m]);
      if (table.sgrid.masters[m] >= 0.9)
        eqerr = std::max(eqerr, std::abs(res.density[m] - eq) / eq);
    }
    rep["density"]["max_rel_mismatch_velocity_rule"] = mism;
    rep["density"]["max_rel_error_vs_equilibrium"] = eqerr;
    rep["conservation"]["max_rel_flux"] = fluxrel;
    rep["conservation"]["max_abs_flux"] = mp.flux.abs().maxCoeff();
  }
  {
    double tmin = std::numeric_limits<double>::infinity(), tmax = 0.0;
    for (int m = 0; m < table.sgrid.size(); ++m) {
      if (std::isnan(mp.t_perp[m])) continue;
      tmin = std::min(tmin, mp.t_perp[m]);
      tmax = std::max(tmax, mp.t_perp[m]);
    }
    rep["t_perp"]["min"] = json_finite(tmin);
    rep["t_perp"]["max"] = json_finite(tmax);
  }
  rep["bc"]["beta_first_model"] = beta_first;

  json props = json::array();
  for (const auto& o : diagnostics::check_kernel_identities(as.pot, as.relax))
    props.push_back(outcome_json(o));
  {
    std::vector<int> trapped;
    for (int j = 0; j <= table.egrid.i_zero_minus; ++j) trapped.push_back(j);
    props.push_back(outcome_json(
        diagnostics::check_turning_averages(table, res.density, trapped)));
    props.push_back(outcome_json(diagnostics::check_attenuation_lower_bound(table)));

    diagnostics::PropertyOutcome envelope;
    envelope.name = "envelope_bound";
    envelope.threshold = 1e-6;
    if (r.bound_checked) {
      const Eigen::ArrayXd cap = r.envelope_constant * (-table.w_m).exp();
      envelope.measured = (res.density - cap).maxCoeff();
      envelope.status = envelope.measured <= envelope.threshold
                            ? diagnostics::Status::Pass
                            : diagnostics::Status::Fail;
    } else {
      envelope.status = diagnostics::Status::Skipped;
      envelope.reason =
          "envelope constant A is infinite (T_inf > 1, or T_inf = 1 with "
          "drift): the bounded-input hypothesis does not hold";
    }
    props.push_back(outcome_json(envelope));
  }
  rep["properties"] = std::move(props);

  const auto t1 = std::chrono::steady_clock::now();
  rep["runtime_seconds"] = std::chrono::duration<double>(t1 - t0).count();

  std::ofstream os(fs::path(cfg.out_dir) / "report.json");
  os << rep.dump(2) << '\n';

  log << (res.report.converged ? "converged" : "NOT CONVERGED") << " in "
      << r.iterations << " iterations, final increment " << r.final_increment
      << "\n";
  if (r.fit) log << "fitted rate a = " << r.fit->a << ", b = " << r.fit->b << "\n";
  log << "artifacts written to " << cfg.out_dir << "\n";
  return res.report.converged ? kExitOk : kExitNoConvergence;
}

BcDistances compare_bc_distances(const ScenarioResult& full,
                                 const ShiftedMaxwellian& input, int threads) {
  const OpticalDepthTable& table = *full.table;
  const Eigen::ArrayXd window = uniform_grid(0.1, 3.0, 146);
  const auto o_full = bc::outgoing_from_solution(full, window);
  const bc::BoundaryModel bm = bc::build_alpha(
      table.pot, table.relax, bc::default_alpha_grid(), table.sgrid.tail);
  const auto o_first =
      bc::apply_first_model(bm, [&](double c) { return input(c); }, window);
  const auto o_second = bc::apply_second_model(table, input, window, threads);

  BcDistances d;
  const double scale = o_full.f.abs().maxCoeff();
  const double h = (3.0 - 0.1) / double(window.size() - 1);
  auto trapz_w = [&](int i) {
    return (i == 0 || i + 1 == window.size()) ? 0.5 * h : h;
  };
  double l1_ref = 0.0;
  for (int i = 0; i < window.size(); ++i) l1_ref += trapz_w(i) * std::abs(o_full.f[i]);
  auto accumulate = [&](const Eigen::ArrayXd& f, double& linf, double& l1) {
    linf = 0.0;
    l1 = 0.0;
    for (int i = 0; i < window.size(); ++i) {
      const double dv = std::abs(f[i] - o_full.f[i]);
      linf = std::max(linf, dv);
      l1 += trapz_w(i) * dv;
    }
  };
  accumulate(o_first.f, d.linf_first, d.l1_first);
  accumulate(o_second.f, d.linf_second, d.l1_second);
  d.rel_linf_first = d.linf_first / scale;
  d.rel_linf_second = d.linf_second / scale;
  d.rel_l1_first = d.l1_first / l1_ref;
  d.rel_l1_second = d.l1_second / l1_ref;
  return d;
}

int compare_bc(const ScenarioConfig& cfg, std::ostream& out) {
  AssembledScenario as = assemble(cfg);
  ScenarioResult res = solve(as.table, as.input, as.params);
  if (!res.report.converged) {
    out << "solve did not converge; cannot compare models\n";
    return kExitNoConvergence;
  }
  const BcDistances d = compare_bc_distances(res, as.input, as.params.threads);
  out << "distances from the full-solve outgoing distribution on c_z in [0.1, 3]\n";
  out << "model    linf_abs      linf_rel      l1_abs        l1_rel\n";
  char line[160];
  std::snprintf(line, sizeof line, "first    %-13.6g %-13.6g %-13.6g %-13.6g\n",
                d.linf_first, d.rel_linf_first, d.l1_first, d.rel_l1_first);
  out << line;
  std::snprintf(line, sizeof line, "second   %-13.6g %-13.6g %-13.6g %-13.6g\n",
                d.linf_second, d.rel_linf_second, d.l1_second, d.rel_l1_second);
  out << line;
  return kExitOk;
}

}  // namespace physisorb
