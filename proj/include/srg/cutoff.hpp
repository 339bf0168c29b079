#pragma once

namespace srg {

// Smooth infrared cutoff pair on the photon-energy axis.
//
// chi1(r) = 1 for r <= 9/10, 0 for r >= 1, and chi1^2 + chibar1^2 = 1
// pointwise.  The transition uses a smoothstep phase so the pair is C^1
// with an exactly unit sum of squares:
//   chi1(r) = cos(pi/2 * theta(10 r - 9)),  theta(t) = t^2 (3 - 2 t) on [0,1].
double chi1(double r);
double chibar1(double r);

// First and second derivatives of chi1 (analytic).
double chi1_prime(double r);
double chi1_second(double r);

// Scaled pair: chi_rho(r) = chi1(r / rho).
struct CutoffPair {
  double chi;
  double chibar;
};
CutoffPair cutoff_chi(double r, double rho);

// sup_r |d^n/dr^n chi1|, n = 0, 1, 2 (n = 0 gives 1).
double chi1_derivative_sup(int n);

// The cutoff constant
//   C_chi = 4/3 * ( sum_{n<=s} sup|chi1^(n)| + sup|chi1'|^2 ),
// evaluated for the concrete cutoff above.  s in {0, 1, 2}.
double cutoff_cchi(int s);

}  // namespace srg
