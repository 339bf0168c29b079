#include "srg/modeset.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace srg {

namespace {
constexpr double kTwoPi = 6.28318530717958647692;
}

double ModeSet::total_weight() const {
  return std::accumulate(weight.begin(), weight.end(), 0.0);
}

bool ModeSet::is_geometric(double rho, double tol) const {
  if (size() < 2) return true;
  for (int i = 0; i + 1 < size(); ++i) {
    if (std::abs(kappa[i + 1] - rho * kappa[i]) > tol * kappa[i]) return false;
  }
  return true;
}

ModeSet build_mode_set(int G, double rho, double kappa_max) {
  if (G < 1) throw std::domain_error("build_mode_set: need at least one shell");
  if (rho <= 0.0 || rho > 0.5) throw std::domain_error("build_mode_set: rho must lie in (0, 1/2]");
  if (kappa_max <= 0.0 || kappa_max > 1.0)
    throw std::domain_error("build_mode_set: kappa_max must lie in (0, 1]");

  ModeSet m;
  m.ratio = rho;
  m.kappa_max = kappa_max;
  m.kappa.resize(G);
  m.weight.resize(G);
  // Iterated multiplication keeps rho * kappa[i] == kappa[i+1] bitwise, so
  // the scaling map lands on nodes exactly.
  m.kappa[0] = kappa_max;
  for (int i = 1; i < G; ++i) {
    m.kappa[i] = rho * m.kappa[i - 1];
    if (m.kappa[i] < 1e-300) throw std::domain_error("build_mode_set: shell modulus underflow");
  }
  // Boundaries: b_0 = kappa_max, interior at geometric midpoints, a_{G-1} = 0.
  const double sq = std::sqrt(rho);
  for (int i = 0; i < G; ++i) {
    const double b = (i == 0) ? kappa_max : m.kappa[i] / sq;
    const double a = (i == G - 1) ? 0.0 : m.kappa[i] * sq;
    m.weight[i] = kTwoPi * (b * b - a * a);
  }
  return m;
}

ModeSet custom_mode_set(std::vector<double> kappa, std::vector<double> weight) {
  if (kappa.empty() || kappa.size() != weight.size())
    throw std::domain_error("custom_mode_set: size mismatch");
  for (size_t i = 0; i + 1 < kappa.size(); ++i) {
    if (kappa[i + 1] >= kappa[i]) throw std::domain_error("custom_mode_set: moduli must decrease");
  }
  for (double v : weight) {
    if (v <= 0.0) throw std::domain_error("custom_mode_set: weights must be positive");
  }
  ModeSet m;
  m.kappa_max = kappa.front();
  m.ratio = kappa.size() > 1 ? kappa[1] / kappa[0] : 0.0;
  for (size_t i = 0; i + 1 < kappa.size(); ++i) {
    if (std::abs(kappa[i + 1] - m.ratio * kappa[i]) > 1e-12 * kappa[i]) m.ratio = 0.0;
  }
  m.kappa = std::move(kappa);
  m.weight = std::move(weight);
  return m;
}

}  // namespace srg
