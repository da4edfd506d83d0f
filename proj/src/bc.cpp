#include "physisorb/bc.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "physisorb/quadrature.hpp"

namespace physisorb::bc {

namespace {
constexpr double kInvSqrt2Pi = 0.39894228040143268;

// Clamped monotone interpolant of the accommodation table, built once.
struct AlphaEval {
  Pchip p;
  double clo, chi, alo, ahi;
  explicit AlphaEval(const BoundaryModel& bm)
      : p(bm.cz, bm.alpha),
        clo(bm.cz[0]),
        chi(bm.cz[bm.cz.size() - 1]),
        alo(bm.alpha[0]),
        ahi(bm.alpha[bm.alpha.size() - 1]) {}
  double operator()(double c) const {
    if (c <= clo) return alo;
    if (c >= chi) return ahi;
    return p(c);
  }
};

// c-moment of a piecewise-smooth function: Gauss panels on the alpha-table
// intervals (the integrand is smooth inside each) plus a Maxwellian-decay
// stretch beyond the table.  One rule serves beta and every flux check, so
// the first model conserves particles to quadrature precision.
double flux_moment(const BoundaryModel& bm, const std::function<double(double)>& f) {
  double acc = gauss_panel([&](double c) { return c * f(c); }, 0.0, bm.cz[0]);
  for (Eigen::Index i = 0; i + 1 < bm.cz.size(); ++i)
    acc += gauss_panel([&](double c) { return c * f(c); }, bm.cz[i], bm.cz[i + 1]);
  const double chi = bm.cz[bm.cz.size() - 1];
  for (int k = 0; k < 8; ++k)
    acc += gauss_panel([&](double c) { return c * f(c); }, chi + 1.25 * k,
                       chi + 1.25 * (k + 1));
  return acc;
}
}  // namespace

double BoundaryModel::alpha_at(double c) const { return AlphaEval(*this)(c); }

Eigen::ArrayXd default_alpha_grid(int n) {
  Eigen::ArrayXd g(n);
  const double lo = std::log(1e-3), hi = std::log(20.0);
  for (int i = 0; i < n; ++i)
    g[i] = std::exp(lo + (hi - lo) * double(i) / double(n - 1));
  g[0] = 1e-3;
  g[n - 1] = 20.0;
  return g;
}

BoundaryModel build_alpha(const Potential& p, const RelaxationModel& r,
                          const Eigen::ArrayXd& cz_grid, const TailPolicy& tail) {
  if ((cz_grid <= 0.0).any())
    throw std::invalid_argument("build_alpha: c_z grid must be positive");
  BoundaryModel bm;
  bm.cz = cz_grid;
  bm.alpha.resize(cz_grid.size());
  for (Eigen::Index i = 0; i < cz_grid.size(); ++i) {
    const double eps = 0.5 * cz_grid[i] * cz_grid[i];
    const double psi = optical_depth_to_infinity(p, r, eps, tail);
    bm.alpha[i] = -std::expm1(-2.0 * psi);
  }
  return bm;
}

double beta_value(const BoundaryModel& bm,
                  const std::function<double(double)>& f_incident) {
  const AlphaEval alpha_of(bm);
  const double denom = flux_moment(bm, [&](double c) {
    return alpha_of(c) * std::exp(-0.5 * c * c) * kInvSqrt2Pi;
  });
  const double numer =
      flux_moment(bm, [&](double c) { return alpha_of(c) * f_incident(-c); });
  if (!(numer > 0.0))
    throw std::invalid_argument("beta_value: incident distribution carries no flux");
  return numer / denom;
}

OutgoingDistribution apply_first_model(const BoundaryModel& bm,
                                       const std::function<double(double)>& f_incident,
                                       const Eigen::ArrayXd& cz_grid) {
  OutgoingDistribution out;
  out.source = OutgoingSource::FirstModel;
  out.beta = beta_value(bm, f_incident);
  out.cz = cz_grid;
  out.f.resize(cz_grid.size());
  const AlphaEval alpha_of(bm);
  auto value = [&](double c) {
    const double al = alpha_of(c);
    return (1.0 - al) * f_incident(-c) +
           al * out.beta * std::exp(-0.5 * c * c) * kInvSqrt2Pi;
  };
  for (Eigen::Index i = 0; i < cz_grid.size(); ++i) out.f[i] = value(cz_grid[i]);
  out.flux_out = flux_moment(bm, value);
  out.flux_in = flux_moment(bm, [&](double c) { return f_incident(-c); });
  return out;
}

namespace {

// Resample per-row outgoing values F_+(infinity, eps_j) onto a c grid.
Eigen::ArrayXd resample_outgoing(const OpticalDepthTable& t,
                                 const Eigen::ArrayXd& per_row,
                                 const Eigen::ArrayXd& cz_grid) {
  std::vector<double> c, f;
  for (int j = t.egrid.i_zero_plus; j < t.egrid.size(); ++j) {
    if (t.rows[j].count == 0 || !std::isfinite(per_row[j])) continue;
    const double cj = std::sqrt(2.0 * t.egrid.nodes[j]);
    if (!c.empty() && cj - c.back() < 1e-14) continue;
    c.push_back(cj);
    f.push_back(per_row[j]);
  }
  Eigen::ArrayXd ca = Eigen::Map<Eigen::ArrayXd>(c.data(), c.size());
  Eigen::ArrayXd fa = Eigen::Map<Eigen::ArrayXd>(f.data(), f.size());
  const Pchip p(ca, fa);
  Eigen::ArrayXd out(cz_grid.size());
  for (Eigen::Index i = 0; i < cz_grid.size(); ++i) {
    const double cq = cz_grid[i];
    if (cq <= ca[0]) {
      out[i] = fa[0];
    } else if (cq >= ca[ca.size() - 1]) {
      const double e_last = 0.5 * ca[ca.size() - 1] * ca[ca.size() - 1];
      out[i] = fa[fa.size() - 1] * std::exp(-(0.5 * cq * cq - e_last));
    } else {
      out[i] = std::max(0.0, p(cq));
    }
  }
  return out;
}

// Energy-grid flux rule matching the sweep's conservation telescoping.
double vrule_flux(const OpticalDepthTable& t, const Eigen::ArrayXd& per_row) {
  double acc = 0.0;
  for (int j = t.egrid.i_zero_plus; j < t.egrid.size(); ++j)
    if (std::isfinite(per_row[j])) acc += t.egrid.weights[j] * per_row[j];
  return acc;
}

}  // namespace

OutgoingDistribution apply_second_model(const OpticalDepthTable& t,
                                        const ShiftedMaxwellian& input,
                                        const Eigen::ArrayXd& cz_grid, int threads) {
  const int nrows = static_cast<int>(t.rows.size());
  const Eigen::ArrayXd f_inf =
      incident_values(t.egrid, [&](double cz) { return input(cz); });
  const Eigen::ArrayXd zero_inf = Eigen::ArrayXd::Zero(nrows);
  const Eigen::ArrayXd zero_n = Eigen::ArrayXd::Zero(t.sgrid.size());
  const Eigen::ArrayXd equilibrium = (-t.w_m).exp();

  // The sweep is affine in its state (n_prev, outer turning values,
  // F_infinity); split the two-iteration map so the equilibrium-guess scale
  // beta can enforce particle conservation of the returned iterate.
  Eigen::ArrayXd tb_zero = Eigen::ArrayXd::Zero(nrows);
  Eigen::ArrayXd tb_eq = Eigen::ArrayXd::Zero(nrows);
  for (int j = 0; j <= t.egrid.i_zero_minus; ++j)
    tb_eq[j] = std::exp(-t.egrid.nodes[j]) * kInvSqrt2Pi;
  const SweepResult sa = sweep(t, zero_n, f_inf, threads, &tb_zero);
  const SweepResult sb = sweep(t, equilibrium, zero_inf, threads, &tb_eq);
  const SweepResult sx = sweep(t, sa.density, f_inf, threads, &sa.field.turn_b);
  const SweepResult sy = sweep(t, sb.density, zero_inf, threads, &sb.field.turn_b);

  const double flux_in = vrule_flux(t, f_inf);
  if (!(flux_in > 0.0))
    throw std::invalid_argument("apply_second_model: incident flux vanishes");
  const double fx = vrule_flux(t, sx.field.outgoing);
  const double fy = vrule_flux(t, sy.field.outgoing);
  if (!(fy > 0.0))
    throw std::runtime_error("apply_second_model: degenerate equilibrium response");
  const double beta = (flux_in - fx) / fy;

  Eigen::ArrayXd per_row(nrows);
  for (int j = 0; j < nrows; ++j)
    per_row[j] = sx.field.outgoing[j] + beta * sy.field.outgoing[j];

  OutgoingDistribution out;
  out.source = OutgoingSource::SecondModel;
  out.beta = beta;
  out.cz = cz_grid;
  out.f = resample_outgoing(t, per_row, cz_grid);
  out.flux_out = vrule_flux(t, per_row);
  out.flux_in = flux_in;
  return out;
}

OutgoingDistribution outgoing_from_solution(const ScenarioResult& result,
                                            const Eigen::ArrayXd& cz_grid) {
  if (!result.report.converged)
    throw std::invalid_argument("outgoing_from_solution: solve did not converge");
  const OpticalDepthTable& t = *result.table;
  OutgoingDistribution out;
  out.source = OutgoingSource::FullSolve;
  out.cz = cz_grid;
  out.f = resample_outgoing(t, result.field.outgoing, cz_grid);
  out.flux_out = vrule_flux(t, result.field.outgoing);
  out.flux_in = vrule_flux(t, result.f_inf);
  return out;
}

void save_boundary_model(const std::string& path, const BoundaryModel& bm,
                         double beta, const std::string& beta_rule) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_boundary_model: cannot open " + path);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", beta);
  os << "# model_order=" << (bm.order == ModelOrder::First ? "first" : "second")
     << " beta_rule=" << beta_rule << " beta=" << buf << "\n";
  os << "c_z,alpha\n";
  for (Eigen::Index i = 0; i < bm.cz.size(); ++i) {
    char line[160];
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", bm.cz[i], bm.alpha[i]);
    os << line;
  }
}

BoundaryModel load_boundary_model(const std::string& path, double* beta_out,
                                  std::string* beta_rule_out) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_boundary_model: cannot open " + path);
  std::string line;
  std::getline(is, line);
  BoundaryModel bm;
  if (line.rfind("# ", 0) == 0) {
    std::istringstream hs(line.substr(2));
    std::string tok;
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "beta" && beta_out) *beta_out = std::stod(val);
      if (key == "beta_rule" && beta_rule_out) *beta_rule_out = val;
      if (key == "model_order")
        bm.order = (val == "second") ? ModelOrder::Second : ModelOrder::First;
    }
  }
  std::getline(is, line);  // column header
  std::vector<double> c, a;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    c.push_back(std::stod(line.substr(0, comma)));
    a.push_back(std::stod(line.substr(comma + 1)));
  }
  bm.cz = Eigen::Map<Eigen::ArrayXd>(c.data(), c.size());
  bm.alpha = Eigen::Map<Eigen::ArrayXd>(a.data(), a.size());
  return bm;
}

}  // namespace physisorb::bc
