#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

#include "srg/kernel.hpp"
#include "srg/modeset.hpp"

namespace srg {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// Occupancy basis over the mode shells, all vectors with total boson number
// <= n_max, in lexicographic order (the vacuum comes first).
class TruncatedFock {
 public:
  TruncatedFock(ModeSet modes, int n_max);

  const ModeSet& modes() const { return modes_; }
  int n_max() const { return n_max_; }
  int dim() const { return static_cast<int>(basis_.size()); }
  int n_modes() const { return modes_.size(); }

  const std::vector<int>& state(int idx) const { return basis_[idx]; }
  double energy(int idx) const { return energy_[idx]; }
  int total_bosons(int idx) const { return totals_[idx]; }

  // Index of an occupation vector, or -1 when it leaves the truncation.
  int index_of(const std::vector<int>& occ) const;

  // k-node index (ascending kernel grid) of mode i.
  int node_of_mode(int mode) const { return modes_.size() - 1 - mode; }

 private:
  ModeSet modes_;
  int n_max_;
  std::vector<std::vector<int>> basis_;
  std::vector<double> energy_;
  std::vector<int> totals_;
  std::unordered_map<uint64_t, int> lookup_;

  static uint64_t key_of(const std::vector<int>& occ);
};

// Annihilation/creation matrices for every mode, standard sqrt(n) elements;
// a_i^dag truncates states that would exceed n_max.
struct LadderPair {
  ComplexMatrix a;
  ComplexMatrix adag;
};
std::vector<LadderPair> ladder_matrices(const TruncatedFock& fock);

// H_f = sum_i kappa_i a_i^dag a_i (diagonal).
ComplexMatrix build_hf(const TruncatedFock& fock);

// The Wick monomial W_{m,n}[w]: ordered mode sums with sqrt(v) per slot and
// the kernel evaluated by spectral calculus in the middle,
//   sum_{i,j} prod sqrt(v) a^dag_{i_1..i_m} w[H_f; kappa_i, kappa_j] a_{j_1..j_n}.
// Throws std::domain_error when the kernel grid lacks the shell moduli.
ComplexMatrix assemble_monomial(const Kernel& w, const TruncatedFock& fock);

// H(w) = w00[H_f] + sum_{m+n>=1} chi W_{m,n} chi with chi = chi_{rho_outer}(H_f).
ComplexMatrix assemble_hamiltonian(const KernelChain& chain, const TruncatedFock& fock,
                                   double rho_outer = 1.0);

// Dense spectrum; Hermitian inputs take the symmetric path and come back
// real-sorted ascending.  Throws on solver failure or above the dim cap.
struct SpectrumResult {
  std::vector<Complex> eigenvalues;
  std::optional<ComplexMatrix> eigenvectors;
  bool hermitian = false;
};
SpectrumResult dense_spectrum(const ComplexMatrix& M, bool want_vectors = false,
                              int dim_cap = 4096);

// Operator-norm bounds for a single monomial.  Two quadrature constants are
// reported: the plain mass (sum v_i)^{1/2} per slot, and the dispersion-
// weighted (sum v_i / kappa_i)^{1/2} per slot.  The resolvent sandwich
// (H_f + lambda)^{-m/2} W (H_f + lambda)^{-n/2} is gated against the
// dispersion-weighted constant (the mass constant admits counterexamples
// through multiply occupied soft shells); the chi_rho sandwich is gated
// against c_quad_mass * rho^{(m+n)(1+mu)} / sqrt(m! n!) * ||w||_mu.
struct OperatorBoundReport {
  double lhs_resolvent;
  double rhs_resolvent;       // c_quad_sharp * ||w||_0
  double rhs_resolvent_mass;  // c_quad_mass * ||w||_0, reported for comparison
  bool ok_resolvent;
  double lhs_cutoff;
  double rhs_cutoff;
  bool ok_cutoff;
  double c_quad_mass;
  double c_quad_sharp;
};
OperatorBoundReport operator_bound_check(const Kernel& w, const TruncatedFock& fock,
                                         double lambda, double mu, double rho);

// Max-norm of a_i F[H_f] - F[H_f + kappa_i] a_i on the sub-sector with
// total boson number <= n_max - 1.
double pull_through_check(const std::function<Complex(double)>& F, const TruncatedFock& fock,
                          int mode);

// Operator norm (largest singular value).
double operator_norm(const ComplexMatrix& M);

}  // namespace srg
