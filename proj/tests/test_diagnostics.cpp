#include <doctest.h>

#include <cmath>

#include "physisorb/diagnostics.hpp"
#include "physisorb/scenario.hpp"

using namespace physisorb;
using diagnostics::Status;

namespace {

AssembledScenario assemble_small(const std::string& preset) {
  ScenarioConfig cfg = preset_config(preset);
  cfg.n_eps = 96;
  cfg.n_zeta = 256;
  return assemble(cfg);
}

}  // namespace

TEST_CASE("kernel identities hold on tiny grids before any full-scale solve") {
  Potential p(PotentialKind::LJ9_3, 1.0);
  RelaxationModel r = RelaxationModel::algebraic(1.0, 1.0, 4.0);
  for (int n : {16, 32}) {
    const auto outcomes = diagnostics::check_kernel_identities(p, r, n, n);
    for (const auto& o : outcomes) {
      INFO(o.name, " measured ", o.measured, " threshold ", o.threshold, " n ", n);
      CHECK(o.status == Status::Pass);
    }
  }
  // the exponential relaxation model as well
  RelaxationModel re = RelaxationModel::exponential(1.0, 1.0);
  for (const auto& o :
       diagnostics::check_kernel_identities(Potential(PotentialKind::LJ12_6, 1.0), re))
    CHECK(o.status == Status::Pass);
}

TEST_CASE("turning values are averages of the source over the orbit") {
  AssembledScenario as = assemble_small("viii");
  const OpticalDepthTable& t = *as.table;

  SUBCASE("weights integrate to one; equilibrium values are the Maxwellian") {
    std::vector<int> trapped;
    for (int j = 0; j <= t.egrid.i_zero_minus; ++j) trapped.push_back(j);
    const Eigen::ArrayXd n_eq = (-t.w_m).exp();
    const auto o = diagnostics::check_turning_averages(t, n_eq, trapped);
    CHECK(o.status == Status::Pass);

    for (int j : {5, t.egrid.i_zero_minus / 2, t.egrid.i_zero_minus}) {
      const RowTable& row = t.rows[j];
      if (row.count == 0) continue;
      Eigen::ArrayXd g(row.count);
      for (int i = 0; i < row.count; ++i) g[i] = n_eq[row.first + i] * row.maxw[i];
      const auto [ta, tb] = trapped_closure(row, g);
      const double expect = std::exp(-row.eps) * 0.39894228040143268;
      CHECK(ta == doctest::Approx(expect).epsilon(1e-12));
      CHECK(tb == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  SUBCASE("a constant source averages to itself exactly") {
    for (int j : {3, t.egrid.i_zero_minus - 2}) {
      const RowTable& row = t.rows[j];
      if (row.count == 0) continue;
      const Eigen::ArrayXd g = Eigen::ArrayXd::Constant(row.count, 0.7311);
      const auto [ta, tb] = trapped_closure(row, g);
      CHECK(ta == doctest::Approx(0.7311).epsilon(1e-13));
      CHECK(tb == doctest::Approx(0.7311).epsilon(1e-13));
    }
  }
}

TEST_CASE("attenuation lower bound e^{-K/sqrt(eps)} holds on every free row") {
  for (const char* preset : {"i", "iii", "iv"}) {
    AssembledScenario as = assemble_small(preset);
    const auto o = diagnostics::check_attenuation_lower_bound(*as.table);
    INFO(preset, " measured ", o.measured);
    CHECK(o.status == Status::Pass);
  }
}

TEST_CASE("restart uniqueness: zero and equilibrium starts meet") {
  for (const char* preset : {"viii", "iii"}) {
    ScenarioConfig cfg = preset_config(preset);
    cfg.n_eps = 96;
    cfg.n_zeta = 256;
    AssembledScenario as = assemble(cfg);
    const auto o = diagnostics::uniqueness_restart(as.table, as.input, as.params);
    INFO(preset, " measured ", o.measured, " threshold ", o.threshold);
    CHECK(o.status == Status::Pass);
  }
}
