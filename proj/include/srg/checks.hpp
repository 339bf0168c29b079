#pragma once

#include <string>

#include "srg/eigensolve.hpp"
#include "srg/feshbach.hpp"
#include "srg/models.hpp"

namespace srg {

// rho^{-1} Gamma F_rho(H(w)) Gamma^*: the decimation step carried out
// entirely at matrix level on the truncated space.
ComplexMatrix matrix_decimation(const KernelChain& chain, const TruncatedFock& fock, double rho);

// Relative Frobenius difference restricted to the rows/columns the
// mode-shift dilation represents (last shell unoccupied on both sides).
double retained_frobenius_rel_diff(const ComplexMatrix& A, const ComplexMatrix& B,
                                   const std::vector<bool>& keep);

// Random pair with commuting T0 and a smooth random partition; scale sets
// the interaction size relative to T0.
FeshbachPair random_feshbach_pair(int dim, std::mt19937_64& rng, double w_scale = 0.2,
                                  int planted_kernel_dim = 0);

struct CheckResult {
  std::string name;
  bool pass;
  std::string detail;
};

// The invariant suites behind the `check` command; n_random scales the
// randomized ones.  Deterministic for a fixed seed.
std::vector<CheckResult> run_all_checks(uint64_t seed, int n_random);

}  // namespace srg
