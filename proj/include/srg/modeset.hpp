#pragma once

#include <vector>

namespace srg {

// Geometric radial momentum shells covering an annulus of the unit ball.
//
// Shell i carries the representative modulus kappa[i] = kappa_max * rho^i
// (descending) and the quadrature mass
//   v_i = int_{shell i} d^3k / |k| = 2 pi (b_i^2 - a_i^2),
// with boundaries at geometric midpoints, b_0 = kappa_max and a_{G-1} = 0.
struct ModeSet {
  std::vector<double> kappa;   // shell moduli, strictly decreasing
  std::vector<double> weight;  // quadrature mass v_i > 0
  double ratio = 0.0;          // geometric ratio rho (0 when not geometric)
  double kappa_max = 0.0;

  int size() const { return static_cast<int>(kappa.size()); }
  double total_weight() const;
  bool is_geometric(double rho, double tol = 1e-12) const;
};

// Builds the geometric shell set.  Throws std::domain_error when the
// requested depth underflows (kappa_max * rho^{G-1} below denormal range).
ModeSet build_mode_set(int G, double rho, double kappa_max);

// Arbitrary shells for tests (unit weights, hand-picked moduli).
ModeSet custom_mode_set(std::vector<double> kappa, std::vector<double> weight);

}  // namespace srg
