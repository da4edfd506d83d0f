#pragma once

// Computational grids for the (zeta, eps) half-space problem.
//
// The energy grid holds the trapped band (w_min, 0] and the free band
// [0, eps_max] with a paired 0-/0+ node representing the one-sided limits
// across the free/trapped boundary, graded geometrically toward 0 from both
// sides and toward w_min.  The spatial grid is a single master node set,
// log-uniform on [zeta_a(eps_max), zeta_max] with the probe positions,
// zeta_min and zeta_a(0) inserted exactly; each energy row uses the master
// nodes inside its classically allowed range plus its exact turning points.

#include <Eigen/Dense>

#include <utility>
#include <vector>

#include "physisorb/model.hpp"

namespace physisorb {

struct EnergyGrid {
  Eigen::ArrayXd nodes;    // ascending eps values; nodes[i_zero_minus] == 0 == nodes[i_zero_plus]
  Eigen::ArrayXd weights;  // trapezoid weights, blockwise (never across the 0-pair)
  int i_zero_minus = -1;   // trapped-side limit at eps = 0
  int i_zero_plus = -1;    // free-side limit at eps = 0
  double eps_max = 0.0;

  int size() const { return static_cast<int>(nodes.size()); }
  bool trapped(int j) const { return j <= i_zero_minus; }
};

struct TailPolicy {
  double zeta_far = 1e4;  // log-stretched auxiliary mesh end
  int n_cells = 48;       // log cells between zeta_max and zeta_far
  // Beyond zeta_far the potential is treated as zero and the remaining
  // optical depth closes as tail_integral_from(zeta_far)/sqrt(2 eps).
};

struct SpatialGrid {
  Eigen::ArrayXd masters;       // ascending zeta nodes, [zeta_a(eps_max), zeta_max]
  std::vector<double> probes;   // probe positions (exact master values)
  std::vector<int> probe_idx;   // indices of the probes in `masters`
  double zeta_max = 0.0;
  TailPolicy tail;

  int size() const { return static_cast<int>(masters.size()); }
  int index_of_zeta_min = -1;
  // Nearest master index to a position.
  int nearest(double zeta) const;
};

struct GridSpec {
  int n_eps = 384;
  int n_zeta = 1024;
  double eps_max = 12.0;
  double zeta_max = 50.0;
  TailPolicy tail;
  std::vector<double> extra_probes;  // inserted exactly into the master set
};

// Production builder; enforces the documented preconditions.
std::pair<EnergyGrid, SpatialGrid> build_grids(const Potential& p, const GridSpec& spec);

// Unchecked core used by the small-grid diagnostics (kernel identities run
// on grids far below the production floors).
std::pair<EnergyGrid, SpatialGrid> build_grids_unchecked(const Potential& p,
                                                         const GridSpec& spec);

// Default probe positions for a potential kind (the fourth is zeta_min).
std::vector<double> default_probes(const Potential& p);

}  // namespace physisorb
