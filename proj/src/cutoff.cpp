#include "srg/cutoff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace srg {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Smoothstep phase, clamped to [0, 1].
inline double theta(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * (3.0 - 2.0 * t);
}

inline double theta_prime(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return 6.0 * t * (1.0 - t);
}

inline double theta_second(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return 6.0 - 12.0 * t;
}

}  // namespace

double chi1(double r) {
  const double t = 10.0 * r - 9.0;
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  return std::cos(0.5 * kPi * theta(t));
}

double chibar1(double r) {
  const double t = 10.0 * r - 9.0;
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return std::sin(0.5 * kPi * theta(t));
}

double chi1_prime(double r) {
  const double t = 10.0 * r - 9.0;
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return -std::sin(0.5 * kPi * theta(t)) * 0.5 * kPi * theta_prime(t) * 10.0;
}

double chi1_second(double r) {
  const double t = 10.0 * r - 9.0;
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double ph = 0.5 * kPi * theta(t);
  const double dph = 0.5 * kPi * theta_prime(t) * 10.0;
  const double ddph = 0.5 * kPi * theta_second(t) * 100.0;
  return -std::cos(ph) * dph * dph - std::sin(ph) * ddph;
}

CutoffPair cutoff_chi(double r, double rho) {
  if (rho <= 0.0) throw std::invalid_argument("cutoff_chi: rho must be positive");
  const double x = r / rho;
  return CutoffPair{chi1(x), chibar1(x)};
}

double chi1_derivative_sup(int n) {
  if (n == 0) return 1.0;
  if (n != 1 && n != 2) throw std::invalid_argument("chi1_derivative_sup: n must be 0, 1 or 2");
  // The transition lives on r in [0.9, 1.0]; a fine scan is plenty for a
  // cached module constant.
  static double sup1 = -1.0, sup2 = -1.0;
  if (sup1 < 0.0) {
    const int samples = 200000;
    double m1 = 0.0, m2 = 0.0;
    for (int i = 0; i <= samples; ++i) {
      const double r = 0.9 + 0.1 * static_cast<double>(i) / samples;
      m1 = std::max(m1, std::abs(chi1_prime(r)));
      m2 = std::max(m2, std::abs(chi1_second(r)));
    }
    sup1 = m1;
    sup2 = m2;
  }
  return n == 1 ? sup1 : sup2;
}

double cutoff_cchi(int s) {
  if (s < 0 || s > 2) throw std::invalid_argument("cutoff_cchi: s must be 0, 1 or 2");
  double sum = 0.0;
  for (int n = 0; n <= s; ++n) sum += chi1_derivative_sup(n);
  const double d1 = chi1_derivative_sup(1);
  return (4.0 / 3.0) * (sum + d1 * d1);
}

}  // namespace srg
