#pragma once

#include <array>
#include <vector>

#include "srg/fock.hpp"
#include "srg/kernel.hpp"

namespace srg {

// Multi-index of one product term in the decimation expansion: L factors,
// factor l carrying m_l external creators, p_l internal creators, n_l
// external annihilators, q_l internal annihilators.
struct WickTermIndex {
  // (m, p, n, q) per factor
  std::vector<std::array<int, 4>> factors;

  int L() const { return static_cast<int>(factors.size()); }
  int total_m() const;
  int total_n() const;

  // Every factor needs m+p+n+q >= 1; the (0,0) series needs L >= 2 and
  // p+q >= 1 per factor.
  void validate() const;
};

struct SingularAmplitude : std::runtime_error {
  double denominator;
  explicit SingularAmplitude(double d)
      : std::runtime_error("vacuum amplitude: resolvent denominator below tolerance"),
        denominator(d) {}
};

// The operator family W^{m,n}_{p,q}[w | r; k]: internal (p, q) legs summed
// over the mode shells with sqrt(v) weights, external slots fixed at the
// given moduli, the kernel of order (m+p, n+q) evaluated at H_f + r, and a
// chi_1(H_f) sandwich:
//   chi_1 sum_x a*(x_(p)) w_{m+p,n+q}[H_f + r; k, x] a(x_(q)) chi_1.
ComplexMatrix generalized_monomial(const KernelChain& chain, const TruncatedFock& fock, int m,
                                   int n, int p, int q, double r,
                                   const std::vector<double>& external);

// Vacuum amplitude of one term at spectral offset r with external moduli
// (new-scale grid values); all interior objects are evaluated at the current
// scale, i.e. kernels at the shell moduli and spectral shifts rho*(r + ...),
// resolvent factors chi1(X)^2 chibar_rho(X)^2 / w00(X), and the edge cutoffs
// chi1(rho(r + rt)).  This is the object whose sums reproduce the matrix
// decimation exactly up to series and order truncation.
Complex vacuum_amplitude(const WickTermIndex& term, const KernelChain& chain,
                         const ModeSet& modes, double rho, double r,
                         const std::vector<double>& external_creation,
                         const std::vector<double>& external_annihilation, int n_max = 8);

struct RenormOptions {
  double rho = 0.4;
  int L_max = 3;
  int M_max = 2;
  int n_max = 3;          // intermediate-state cap of the vacuum amplitudes
  double prune_tol = 0.0; // skip terms whose crude bound falls below this
  double singular_tol = 1e-12;
  bool check_polydisc = true;
  bool estimate_dropped = false;  // probe the first discarded order
};

struct RenormReport {
  std::vector<double> per_L_chain_norm;  // chain-norm mass per series order
  double neumann_tail_estimate = 0.0;
  double dropped_order_estimate = 0.0;   // orders past M_max (probe estimate)
  double pruned_bound = 0.0;
};

struct RenormResult {
  KernelChain chain;
  RenormReport report;
};

// Kernel-level decimation + rescaling: returns w_hat with
// H(w_hat) = rho^{-1} Gamma F_rho(H(w)) Gamma^* up to truncation at L_max /
// M_max / the mode grid.  The chain grid's k nodes must be the shell moduli.
// Refuses chains outside the polydisc (rho/8, 1/8, rho/8) measured with p.
RenormResult renormalized_chain(const KernelChain& chain, const ModeSet& modes,
                                const RenormOptions& opt, const BanachParams& p);

// Measured contraction of one step against the closed-form bounds, both
// evaluated with the computed cutoff constant and xi = sqrt(rho)/(4 C_chi).
struct WickDiagnostics {
  double measured_w1_hat;     // chain norm of the output, working xi
  double measured_E_shift;    // |E_hat - E / rho|
  double measured_T_prime;    // sup |T_hat' - 1|
  double theory_w1_in;        // input chain norm at the theoretical xi
  double theory_w1_hat;       // output chain norm at the theoretical xi
  double bound_w1;            // 256 C^2 rho^mu * theory_w1_in
  double bound_E;             // 24 C (C xi theory_w1_in / rho)^2
  double bound_T;             // input sup|T'-1| + 24 C rho (C xi theory_w1_in / rho)^2
  double c_chi;
  double xi_theory;
};
WickDiagnostics wick_norm_diagnostics(const KernelChain& chain, const KernelChain& hat_chain,
                                      double rho, const BanachParams& p);

}  // namespace srg
