#include "srg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace srg {

RadialGrid::RadialGrid(std::vector<double> r, std::vector<double> k)
    : r_nodes(std::move(r)), k_nodes(std::move(k)) {
  if (r_nodes.size() < 4 || k_nodes.size() < 4)
    throw std::domain_error("RadialGrid: need at least 4 nodes per axis");
  if (r_nodes.front() != 0.0) throw std::domain_error("RadialGrid: r_nodes must start at 0");
  if (r_nodes.back() < 1.0) throw std::domain_error("RadialGrid: R_max must be >= 1");
  if (!std::is_sorted(r_nodes.begin(), r_nodes.end()) ||
      std::adjacent_find(r_nodes.begin(), r_nodes.end()) != r_nodes.end())
    throw std::domain_error("RadialGrid: r_nodes must strictly increase");
  if (!std::is_sorted(k_nodes.begin(), k_nodes.end()) ||
      std::adjacent_find(k_nodes.begin(), k_nodes.end()) != k_nodes.end())
    throw std::domain_error("RadialGrid: k_nodes must strictly increase");
  if (k_nodes.front() <= 0.0 || k_nodes.back() > 1.0)
    throw std::domain_error("RadialGrid: k_nodes must lie in (0, 1]");

  const double h = r_nodes[1] - r_nodes[0];
  r_uniform = true;
  for (size_t i = 1; i + 1 < r_nodes.size(); ++i) {
    if (std::abs(r_nodes[i + 1] - r_nodes[i] - h) > 1e-12 * h) {
      r_uniform = false;
      break;
    }
  }
  if (r_uniform) r_step_inv = 1.0 / h;
}

std::shared_ptr<const RadialGrid> RadialGrid::make(int nr, double r_max, const ModeSet& modes) {
  std::vector<double> r(nr);
  for (int i = 0; i < nr; ++i) r[i] = r_max * static_cast<double>(i) / (nr - 1);
  std::vector<double> k(modes.kappa.rbegin(), modes.kappa.rend());
  return std::make_shared<RadialGrid>(std::move(r), std::move(k));
}

void BanachParams::validate() const {
  if (mu < 0.0) throw std::domain_error("BanachParams: mu must be >= 0");
  if (s < 0 || s > 2) throw std::domain_error("BanachParams: s must be 0, 1 or 2");
  if (xi <= 0.0 || xi >= 1.0) throw std::domain_error("BanachParams: xi must lie in (0, 1)");
}

Segment locate_segment(const std::vector<double>& nodes, double x) {
  const int n = static_cast<int>(nodes.size());
  int i = static_cast<int>(std::upper_bound(nodes.begin(), nodes.end(), x) - nodes.begin()) - 1;
  i = std::clamp(i, 0, n - 2);
  const double h = nodes[i + 1] - nodes[i];
  return Segment{i, (x - nodes[i]) / h};
}

}  // namespace srg
