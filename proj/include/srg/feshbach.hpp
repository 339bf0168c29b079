#pragma once

#include <stdexcept>

#include "srg/fock.hpp"

namespace srg {

// Thrown when the chibar block is not invertible, i.e. the input is not a
// valid pair for the decimation map.
struct NotFeshbachPair : std::runtime_error {
  double smallest_singular_value;
  explicit NotFeshbachPair(double smin)
      : std::runtime_error("not a Feshbach pair: chibar block numerically singular"),
        smallest_singular_value(smin) {}
};

// Smooth partition of unity: chi, chibar Hermitian, 0 <= chi, chibar <= 1,
// chi^2 + chibar^2 = 1.
struct Partition {
  ComplexMatrix chi;
  ComplexMatrix chibar;

  void validate(double tol = 1e-12) const;

  // chi = chi_rho(H_f), chibar the complementary cutoff, both diagonal.
  static Partition hf_cutoff(const TruncatedFock& fock, double rho);
};

// An operator together with the commuting part T0 = tau(H) and a partition.
struct FeshbachPair {
  ComplexMatrix H;
  ComplexMatrix T0;
  Partition part;

  ComplexMatrix W() const { return H - T0; }
};

// Orthonormal basis of the numerical range of a Hermitian PSD operator
// (eigenvalue threshold), columns of the returned matrix.
ComplexMatrix ran_basis(const ComplexMatrix& chi, double threshold = 1e-10);

struct FeshbachResult {
  ComplexMatrix F_full;       // on the whole space
  ComplexMatrix F_ran;        // compressed to Ran chi
  ComplexMatrix ran_chi;      // basis used for the compression
  ComplexMatrix hbar_inv;     // (T0 + chibar W chibar)^{-1} on Ran chibar
  double smin_chibar_block;
};

// F = T0 + chi W chi - chi W chibar (T0 + chibar W chibar)^{-1} chibar W chi.
FeshbachResult feshbach_map(const FeshbachPair& pair, double invert_tol = 1e-10);

struct QMaps {
  ComplexMatrix Q;       // Ran chi -> full space
  ComplexMatrix Qsharp;  // full space -> Ran chi
};
QMaps q_maps(const FeshbachPair& pair, double invert_tol = 1e-10);

// H^{-1} = Q F^{-1} Q# + chibar Hbar^{-1} chibar.
ComplexMatrix resolvent_reconstruct(const FeshbachPair& pair, double invert_tol = 1e-10);

// Validity report for H(chain) with tau(H) = w00[H_f] and chi = chi_rho(H_f).
struct PairCheckReport {
  double commutator_norm;      // ||[T0, chi]||_max (zero here, both diagonal)
  double smin_chibar_block;
  bool invertible;
  double inverse_norm;         // ||H_{tau,chibar}^{-1}|| on Ran chibar
  double paper_bound;          // 8 / (3 rho)
  PolydiscReport polydisc;
};
PairCheckReport pair_check(const KernelChain& chain, const TruncatedFock& fock, double rho,
                           const BanachParams& p);

// Isospectrality checks: kernel-dimension equality and transport of null
// vectors both ways, plus the intertwining identity H Q = chi F.
struct IsospectralityReport {
  int dim_ker_H;
  int dim_ker_F;
  double forward_residual;    // max ||F (chi psi)|| over null vectors of H
  double backward_residual;   // max ||H (Q phi)|| over null vectors of F
  double intertwine_error;    // ||H Q - chi F||
};
IsospectralityReport isospectrality_suite(const FeshbachPair& pair, double rank_tol = 1e-8);

// Numerical kernel dimension: singular values below tol * ||M||.
int kernel_dimension(const ComplexMatrix& M, double tol = 1e-8);

}  // namespace srg
