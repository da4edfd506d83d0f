#include "physisorb/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace physisorb {

namespace {

// Geometric ramp of gaps g0, g0*r, ... capped at h, accumulated from `from`
// toward `to` (direction +-1).  Appends interior points only.
void ramp(std::vector<double>& out, double from, double limit, int dir, double g0,
          double h, double r) {
  double x = from;
  double g = g0;
  while (true) {
    x += dir * g;
    if ((dir > 0 && x >= limit) || (dir < 0 && x <= limit)) break;
    out.push_back(x);
    if (g >= h) break;
    g = std::min(g * r, h);
  }
}

// A block [a, b] with geometric clustering at both ends (initial gaps ga, gb)
// and a quasi-uniform middle, about n nodes including both ends.
std::vector<double> graded_block(double a, double b, int n, double ga, double gb) {
  n = std::max(n, 4);
  const double r = 1.35;
  double h = (b - a) / n;  // target middle gap, refined below
  for (int pass = 0; pass < 8; ++pass) {
    std::vector<double> left, right;
    left.push_back(a);
    ramp(left, a, 0.5 * (a + b), +1, ga, h, r);
    right.push_back(b);
    ramp(right, b, 0.5 * (a + b), -1, gb, h, r);
    const double lo = left.back(), hi = right.back();
    const int mid = std::max(1, static_cast<int>(std::ceil((hi - lo) / h)) - 1);
    const int total = static_cast<int>(left.size() + right.size()) + mid;
    if (std::abs(total - n) <= std::max(2, n / 20) || pass == 7) {
      std::vector<double> nodes = left;
      for (int i = 1; i <= mid; ++i)
        nodes.push_back(lo + (hi - lo) * double(i) / double(mid + 1));
      for (auto it = right.rbegin(); it != right.rend(); ++it) nodes.push_back(*it);
      std::sort(nodes.begin(), nodes.end());
      nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
      return nodes;
    }
    h *= double(total) / double(n);
  }
  return {a, b};  // unreachable
}

Eigen::ArrayXd to_array(const std::vector<double>& v) {
  Eigen::ArrayXd a(v.size());
  for (size_t i = 0; i < v.size(); ++i) a[i] = v[i];
  return a;
}

}  // namespace

int SpatialGrid::nearest(double zeta) const {
  const double* begin = masters.data();
  const double* end = begin + masters.size();
  const double* it = std::lower_bound(begin, end, zeta);
  if (it == begin) return 0;
  if (it == end) return size() - 1;
  const int i = static_cast<int>(it - begin);
  return (zeta - masters[i - 1] <= masters[i] - zeta) ? i - 1 : i;
}

std::vector<double> default_probes(const Potential& p) {
  if (p.kind() == PotentialKind::LJ12_6) return {0.934, 1.0, p.zeta_min(), 1.371};
  return {0.901, 1.0, p.zeta_min(), 2.293};
}

std::pair<EnergyGrid, SpatialGrid> build_grids_unchecked(const Potential& p,
                                                         const GridSpec& spec) {
  const double wmin = p.w_min();
  const double scale = std::max(1.0, std::abs(wmin));

  // --- energy grid ---
  EnergyGrid eg;
  eg.eps_max = spec.eps_max;
  const int n_tr = std::max(8, spec.n_eps / 3);
  const int n_fr = std::max(8, spec.n_eps - n_tr);

  // Trapped band: (w_min, 0], graded toward both ends; last node is 0-.
  const double floor_w = 1e-5 * scale;
  const double floor_z = 1e-8 * scale;
  std::vector<double> trapped =
      graded_block(wmin + floor_w, -floor_z, n_tr - 1, floor_w, floor_z);
  trapped.push_back(0.0);  // the 0- node

  // Free band: [0, eps_max]; geometric near 0+, then uniform in u = sqrt(2 eps).
  std::vector<double> free_nodes;
  free_nodes.push_back(0.0);  // the 0+ node
  const double knee = std::min(0.05 * scale, 0.25 * spec.eps_max);
  const int n_low = std::max(8, n_fr / 4);
  const double ratio = std::pow(knee / floor_z, 1.0 / n_low);
  double e = floor_z;
  for (int i = 0; i < n_low; ++i) {
    free_nodes.push_back(e);
    e *= ratio;
  }
  const int n_high = std::max(4, n_fr - n_low - 1);
  const double u_lo = std::sqrt(2.0 * knee), u_hi = std::sqrt(2.0 * spec.eps_max);
  for (int i = 0; i <= n_high; ++i) {
    const double u = u_lo + (u_hi - u_lo) * double(i) / double(n_high);
    free_nodes.push_back(0.5 * u * u);
  }
  free_nodes.back() = spec.eps_max;

  std::vector<double> all = trapped;
  all.insert(all.end(), free_nodes.begin(), free_nodes.end());
  eg.nodes = to_array(all);
  eg.i_zero_minus = static_cast<int>(trapped.size()) - 1;
  eg.i_zero_plus = eg.i_zero_minus + 1;

  // Blockwise trapezoid weights; the first trapped weight extends to w_min.
  eg.weights = Eigen::ArrayXd::Zero(eg.size());
  auto block_weights = [&](int lo, int hi) {
    if (hi == lo) {
      eg.weights[lo] = 0.0;
      return;
    }
    for (int j = lo; j <= hi; ++j) {
      const double left = (j == lo) ? eg.nodes[lo] : 0.5 * (eg.nodes[j - 1] + eg.nodes[j]);
      const double right = (j == hi) ? eg.nodes[hi] : 0.5 * (eg.nodes[j] + eg.nodes[j + 1]);
      eg.weights[j] = right - left;
    }
  };
  block_weights(0, eg.i_zero_minus);
  block_weights(eg.i_zero_plus, eg.size() - 1);
  eg.weights[0] += eg.nodes[0] - wmin;  // cover the sliver down to the well bottom

  // --- spatial grid ---
  // Segmented log-uniform construction: the special positions (probes,
  // zeta_min, zeta_a(0)) become exact nodes and each segment between them is
  // filled log-uniformly with a node count proportional to its log length,
  // which keeps the adjacent-spacing ratio well under the grading cap.
  SpatialGrid sg;
  sg.zeta_max = spec.zeta_max;
  sg.tail = spec.tail;
  const double zeta_lo = p.zeta_a(spec.eps_max);

  std::vector<double> anchors = {zeta_lo, spec.zeta_max};
  for (double q : default_probes(p)) anchors.push_back(q);
  anchors.push_back(p.zeta_min());
  anchors.push_back(p.zeta_zero());
  for (double q : spec.extra_probes) anchors.push_back(q);
  anchors.erase(std::remove_if(anchors.begin(), anchors.end(),
                               [&](double q) {
                                 return q < zeta_lo || q > spec.zeta_max;
                               }),
                anchors.end());
  std::sort(anchors.begin(), anchors.end());
  anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());

  const double lr = std::log(spec.zeta_max / zeta_lo);
  std::vector<double> masters;
  for (size_t seg = 0; seg + 1 < anchors.size(); ++seg) {
    const double a = anchors[seg], b = anchors[seg + 1];
    const double len = std::log(b / a);
    const int cells = std::max(1, static_cast<int>(std::lround(spec.n_zeta * len / lr)));
    masters.push_back(a);
    for (int i = 1; i < cells; ++i)
      masters.push_back(a * std::exp(len * double(i) / double(cells)));
  }
  masters.push_back(spec.zeta_max);
  sg.masters = to_array(masters);

  sg.probes = default_probes(p);
  for (double q : spec.extra_probes)
    if (q > zeta_lo && q < spec.zeta_max) sg.probes.push_back(q);
  std::sort(sg.probes.begin(), sg.probes.end());
  sg.probes.erase(std::unique(sg.probes.begin(), sg.probes.end()), sg.probes.end());
  for (double q : sg.probes) sg.probe_idx.push_back(sg.nearest(q));
  sg.index_of_zeta_min = sg.nearest(p.zeta_min());

  return {eg, sg};
}

std::pair<EnergyGrid, SpatialGrid> build_grids(const Potential& p, const GridSpec& spec) {
  if (spec.n_eps < 64) throw std::invalid_argument("build_grids: n_eps must be >= 64");
  if (spec.n_zeta < 128) throw std::invalid_argument("build_grids: n_zeta must be >= 128");
  if (!(spec.eps_max >= 12.0)) throw std::invalid_argument("build_grids: eps_max must be >= 12");
  if (!(spec.zeta_max > 2.0 * p.zeta_min()))
    throw std::invalid_argument("build_grids: zeta_max must exceed 2*zeta_min");
  return build_grids_unchecked(p, spec);
}

}  // namespace physisorb
