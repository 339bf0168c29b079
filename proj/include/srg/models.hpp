#pragma once

#include <random>

#include "srg/kernel.hpp"

namespace srg {

// w00(r) = r, no interaction: the free photon Hamiltonian.
KernelChain make_hf_chain(GridPtr grid);

// Massless linear-coupling model with an infrared envelope keeping the
// weighted norm finite: w10 = w01 = g |k|^mu, w00(r) = r.  Self-adjoint iff
// g is real.
KernelChain generate_toy_model(Complex g, double mu, GridPtr grid);

// Seeded random kernels for the property suites: per-tuple random quadratic
// r-profiles under the product envelope prod_j |k_j|^envelope_mu,
// symmetrized.  Magnitudes are bounded by `scale`.
Kernel random_kernel(int m, int n, GridPtr grid, std::mt19937_64& rng, double envelope_mu,
                     double scale = 1.0);

// Random chain in the polydisc: w00(r) = r, random interaction orders up to
// order_max with chain norm about `gamma_scale` (not exact).
KernelChain random_chain(GridPtr grid, std::mt19937_64& rng, int order_max, double envelope_mu,
                         double gamma_scale, bool selfadjoint);

}  // namespace srg
