#include "physisorb/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace physisorb {

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"i",  "ii",  "iii", "iv",
                                                 "v",  "vi",  "vii", "viii"};
  return names;
}

ScenarioConfig preset_config(const std::string& name) {
  ScenarioConfig c;
  c.preset = name;
  // (kappa, kappa_tau, sigma) = (1, 1, 1) for every tabulated case.
  if (name == "i") {
    c.potential = PotentialKind::LJ12_6;
    c.relaxation = RelaxationKind::Algebraic;
    c.nu = 7.0;
    c.t_inf = 1.0;
    c.vz_inf = -0.5;
  } else if (name == "ii") {
    c.potential = PotentialKind::LJ12_6;
    c.relaxation = RelaxationKind::Exponential;
    c.t_inf = 1.0;
    c.vz_inf = -0.5;
  } else if (name == "iii") {
    c.potential = PotentialKind::LJ9_3;
    c.relaxation = RelaxationKind::Algebraic;
    c.nu = 4.0;
    c.t_inf = 1.0;
    c.vz_inf = -0.5;
  } else if (name == "iv") {
    c.potential = PotentialKind::LJ9_3;
    c.relaxation = RelaxationKind::Exponential;
    c.t_inf = 1.0;
    c.vz_inf = -0.5;
  } else if (name == "v") {
    c.potential = PotentialKind::LJ9_3;
    c.relaxation = RelaxationKind::Algebraic;
    c.nu = 4.0;
    c.t_inf = 1.0;
    c.vz_inf = 0.5;
  } else if (name == "vi") {
    c.potential = PotentialKind::LJ9_3;
    c.relaxation = RelaxationKind::Algebraic;
    c.nu = 4.0;
    c.t_inf = 0.6;
    c.vz_inf = 0.0;
  } else if (name == "vii") {
    c.potential = PotentialKind::LJ9_3;
    c.relaxation = RelaxationKind::Algebraic;
    c.nu = 4.0;
    c.t_inf = 0.6;
    c.vz_inf = -0.5;
  } else if (name == "viii") {
    c.potential = PotentialKind::LJ9_3;
    c.relaxation = RelaxationKind::Algebraic;
    c.nu = 4.0;
    c.t_inf = 1.0;
    c.vz_inf = 0.0;
  } else {
    throw ConfigError("preset", "unknown preset '" + name + "'");
  }
  return c;
}

namespace {

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                        (v.front() == '\'' && v.back() == '\'')))
    return v.substr(1, v.size() - 2);
  return v;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + v + "'");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  const double x = parse_double(key, v);
  if (x != static_cast<int>(x)) throw ConfigError(key, "expected an integer");
  return static_cast<int>(x);
}

}  // namespace

void apply_config_line(ScenarioConfig& c, const std::string& key,
                       const std::string& raw) {
  const std::string v = unquote(strip(raw));
  std::string lv = v;
  std::transform(lv.begin(), lv.end(), lv.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  if (key == "preset") {
    ScenarioConfig base = preset_config(lv);
    base.out_dir = c.out_dir;
    c = base;
  } else if (key == "potential") {
    if (lv == "lj12_6" || lv == "lj(12,6)") c.potential = PotentialKind::LJ12_6;
    else if (lv == "lj9_3" || lv == "lj(9,3)") c.potential = PotentialKind::LJ9_3;
    else throw ConfigError(key, "expected lj12_6 or lj9_3");
  } else if (key == "relaxation") {
    if (lv == "algebraic") c.relaxation = RelaxationKind::Algebraic;
    else if (lv == "exponential") c.relaxation = RelaxationKind::Exponential;
    else throw ConfigError(key, "expected algebraic or exponential");
  } else if (key == "kappa") c.kappa = parse_double(key, v);
  else if (key == "kappa_tau") c.kappa_tau = parse_double(key, v);
  else if (key == "sigma") c.sigma = parse_double(key, v);
  else if (key == "nu") c.nu = parse_double(key, v);
  else if (key == "t_inf") c.t_inf = parse_double(key, v);
  else if (key == "vz_inf") c.vz_inf = parse_double(key, v);
  else if (key == "n_eps") c.n_eps = parse_int(key, v);
  else if (key == "n_zeta") c.n_zeta = parse_int(key, v);
  else if (key == "eps_max") c.eps_max = parse_double(key, v);
  else if (key == "zeta_max") c.zeta_max = parse_double(key, v);
  else if (key == "zeta_far") c.zeta_far = parse_double(key, v);
  else if (key == "n_tail") c.n_tail = parse_int(key, v);
  else if (key == "tol") c.tol = parse_double(key, v);
  else if (key == "k_max") c.k_max = parse_int(key, v);
  else if (key == "k_min_fit") c.k_min_fit = parse_int(key, v);
  else if (key == "threads") c.threads = parse_int(key, v);
  else if (key == "discretization_tol") c.discretization_tol = parse_double(key, v);
  else if (key == "out_dir") c.out_dir = v;
  else throw ConfigError(key, "unknown key");
}

void apply_config_file(ScenarioConfig& c, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config", "cannot read '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected key = value");
    apply_config_line(c, strip(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void validate(const ScenarioConfig& c) {
  if (!(c.kappa > 0.0)) throw ConfigError("kappa", "must be positive");
  if (!(c.kappa_tau > 0.0)) throw ConfigError("kappa_tau", "must be positive");
  if (!(c.sigma > 0.0)) throw ConfigError("sigma", "must be positive");
  if (c.relaxation == RelaxationKind::Algebraic && !(c.nu > 1.0))
    throw ConfigError("nu", "must exceed 1");
  if (!(c.t_inf > 0.0)) throw ConfigError("t_inf", "must be positive");
  if (c.n_eps < 64) throw ConfigError("n_eps", "must be >= 64");
  if (c.n_zeta < 128) throw ConfigError("n_zeta", "must be >= 128");
  if (!(c.eps_max >= 12.0)) throw ConfigError("eps_max", "must be >= 12");
  const Potential p(c.potential, c.kappa);
  if (!(c.zeta_max > 2.0 * p.zeta_min()))
    throw ConfigError("zeta_max", "must exceed 2*zeta_min");
  if (!(c.zeta_far > c.zeta_max)) throw ConfigError("zeta_far", "must exceed zeta_max");
  if (!(c.tol > 0.0)) throw ConfigError("tol", "must be positive");
  if (c.k_max < 1) throw ConfigError("k_max", "must be >= 1");
  if (c.threads < 0) throw ConfigError("threads", "must be >= 0");
}

AssembledScenario assemble(const ScenarioConfig& c) {
  validate(c);
  Potential pot(c.potential, c.kappa);
  RelaxationModel relax =
      c.relaxation == RelaxationKind::Algebraic
          ? RelaxationModel::algebraic(c.kappa_tau, c.sigma, c.nu)
          : RelaxationModel::exponential(c.kappa_tau, c.sigma);
  GridSpec spec;
  spec.n_eps = c.n_eps;
  spec.n_zeta = c.n_zeta;
  spec.eps_max = c.eps_max;
  spec.zeta_max = c.zeta_max;
  spec.tail.zeta_far = c.zeta_far;
  spec.tail.n_cells = c.n_tail;
  spec.extra_probes = c.probes;
  auto [eg, sg] = build_grids(pot, spec);
  auto table = std::make_shared<OpticalDepthTable>(
      build_optical_depth(pot, relax, eg, sg, c.threads));
  SolverParams params;
  params.tol = c.tol;
  params.k_max = c.k_max;
  params.k_min_fit = c.k_min_fit;
  params.threads = c.threads;
  return AssembledScenario{pot, relax, std::move(table),
                           ShiftedMaxwellian{c.t_inf, c.vz_inf}, params};
}

}  // namespace physisorb
