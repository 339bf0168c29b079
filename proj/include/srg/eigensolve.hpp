#pragma once

#include "srg/feshbach.hpp"
#include "srg/rgflow.hpp"

namespace srg {

// Mode-shift dilation on the geometric grid: Gamma relabels shell i -> i-1
// (energies scale by 1/rho); occupation of shell 0 has no image and maps to
// zero.  Gamma* shifts the other way and loses the deepest shell.  Both fix
// the vacuum.
struct DilationPair {
  ComplexMatrix gamma;
  ComplexMatrix gamma_star;
};
DilationPair gamma_dilation(const TruncatedFock& fock, double rho);

// Projector onto the states Gamma* keeps (no occupation of the last shell).
std::vector<bool> gamma_retained_states(const TruncatedFock& fock);

// Q^{(j)} = Q_{tau, chi_rho}(H^{(j)}) for each step chain.
std::vector<ComplexMatrix> q_chain(const std::vector<KernelChain>& chains,
                                   const TruncatedFock& fock, const RGConfig& cfg);

struct EigenvectorResult {
  Complex E;                          // H_u + e from the flow
  std::vector<ComplexVector> psi;     // Psi_0..Psi_kmax
  std::vector<double> residuals;      // ||(H - E) Psi_k||
  std::vector<double> gamma_meas;     // gamma_0..gamma_kmax (measured)
  ComplexVector psi_normalized;       // final vector, unit norm
  bool collapse_warning = false;      // ||Psi|| fell below 1/2
  FlowResult flow;
};

// Constructive eigenvector Psi_k = Q^{(0)} Gamma* Q^{(1)} ... Q^{(k-1)} Omega
// for H - E, with E taken from the flow itself.
EigenvectorResult eigenvector_sequence(const KernelChain& chain, const ModeSet& modes,
                                       const RGConfig& cfg, int k_max);

// Same construction against an already-computed flow of the same chain.
EigenvectorResult eigenvector_sequence(const KernelChain& chain, const ModeSet& modes,
                                       const RGConfig& cfg, int k_max, FlowResult flow);

}  // namespace srg
