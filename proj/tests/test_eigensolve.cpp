#include <cmath>

#include "doctest.h"
#include "srg/checks.hpp"

using namespace srg;

TEST_CASE("gamma dilation: vacuum fixed, shell shift, scaling relation") {
  const double rho = 0.4;
  const ModeSet ms = build_mode_set(6, rho, 1.0);
  const TruncatedFock fock(ms, 3);
  const DilationPair gd = gamma_dilation(fock, rho);

  // vacuum column
  CHECK(gd.gamma(0, 0) == Complex(1.0));
  CHECK((gd.gamma.col(0).cwiseAbs().sum()) == 1.0);

  // one boson in shell 1 maps to one boson in shell 0
  std::vector<int> occ(6, 0);
  occ[1] = 1;
  const int from = fock.index_of(occ);
  occ[1] = 0;
  occ[0] = 1;
  const int to = fock.index_of(occ);
  CHECK(gd.gamma(to, from) == Complex(1.0));

  // rho^{-1} Gamma H_f Gamma^* = H_f on the kept sector
  const ComplexMatrix lhs = gd.gamma * build_hf(fock) * gd.gamma_star / rho;
  const ComplexMatrix hf = build_hf(fock);
  const auto keep = gamma_retained_states(fock);
  double worst = 0.0;
  for (int b = 0; b < fock.dim(); ++b) {
    if (!keep[b]) continue;
    for (int a = 0; a < fock.dim(); ++a)
      if (keep[a]) worst = std::max(worst, std::abs(lhs(a, b) - hf(a, b)));
  }
  CHECK(worst < 1e-13);

  // isometry on Gamma's kept set (no occupation of shell 0)
  const ComplexMatrix gg = gd.gamma_star * gd.gamma;
  for (int b = 0; b < fock.dim(); ++b) {
    if (fock.state(b)[0] != 0) continue;
    for (int a = 0; a < fock.dim(); ++a) {
      if (fock.state(a)[0] != 0) continue;
      CHECK(std::abs(gg(a, b) - (a == b ? 1.0 : 0.0)) < 1e-13);
    }
  }

  const ModeSet bad = custom_mode_set({1.0, 0.7, 0.2}, {1.0, 1.0, 1.0});
  const TruncatedFock fock_bad(bad, 2);
  CHECK_THROWS_AS((void)gamma_dilation(fock_bad, rho), std::domain_error);
}

TEST_CASE("q_chain: free steps give chi_rho, toy steps stay close to it") {
  const double rho = 0.4;
  RGConfig cfg;
  cfg.rho = rho;
  cfg.xi_override = 0.25;
  cfg.G = 6;
  cfg.n_r = 17;
  cfg.n_max = 2;
  const ModeSet ms = build_mode_set(cfg.G, rho, 1.0);
  const GridPtr gr = RadialGrid::make(cfg.n_r, cfg.r_max, ms);
  const TruncatedFock fock(ms, cfg.n_max);

  {
    const std::vector<KernelChain> chains = {make_hf_chain(gr)};
    const auto Q = q_chain(chains, fock, cfg);
    const Partition part = Partition::hf_cutoff(fock, rho);
    CHECK(operator_norm(Q[0] - part.chi) < 1e-13);
  }

  {
    const KernelChain toy = generate_toy_model(Complex(0.005, 0.0), 0.5, gr);
    const BanachParams p = cfg.banach();
    const std::vector<KernelChain> chains = {toy};
    const auto Q = q_chain(chains, fock, cfg);
    const Partition part = Partition::hf_cutoff(fock, rho);
    const double gamma0 = chain_norm(toy, p);
    CHECK(operator_norm(Q[0] - part.chi) <= 16.0 * gamma0 / rho);

    // intertwining H Q = chi F at matrix level
    FeshbachPair pair;
    pair.H = assemble_hamiltonian(toy, fock);
    pair.T0 = ComplexMatrix::Zero(fock.dim(), fock.dim());
    for (int i = 0; i < fock.dim(); ++i) pair.T0(i, i) = toy.w00.eval_r(fock.energy(i), 0);
    pair.part = part;
    const FeshbachResult fr = feshbach_map(pair);
    CHECK(operator_norm(pair.H * Q[0] - part.chi * fr.F_full) < 1e-10);
  }
}

TEST_CASE("eigenvector sequence: free chain stays at the vacuum") {
  RGConfig cfg;
  cfg.rho = 0.4;
  cfg.xi_override = 0.25;
  cfg.G = 6;
  cfg.n_r = 17;
  cfg.n_max = 2;
  cfg.n_steps = 3;
  const ModeSet ms = build_mode_set(cfg.G, cfg.rho, 1.0);
  const GridPtr gr = RadialGrid::make(cfg.n_r, cfg.r_max, ms);

  const EigenvectorResult res = eigenvector_sequence(make_hf_chain(gr), ms, cfg, 3);
  CHECK(std::abs(res.E) < 1e-13);
  for (const auto& psi : res.psi) {
    CHECK(std::abs(psi(0) - Complex(1.0)) < 1e-12);
    CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (double r : res.residuals) CHECK(r < 1e-12);
  CHECK_FALSE(res.collapse_warning);
}

TEST_CASE("eigenvector sequence: toy chain certificates and oracle overlap") {
  RGConfig cfg;
  cfg.rho = 0.4;
  cfg.mu = 0.5;
  cfg.xi_override = 0.25;
  cfg.G = 8;
  cfg.n_r = 17;
  cfg.n_max = 3;
  cfg.n_steps = 4;
  const ModeSet ms = build_mode_set(cfg.G, cfg.rho, 1.0);
  const GridPtr gr = RadialGrid::make(cfg.n_r, cfg.r_max, ms);
  const KernelChain toy = generate_toy_model(Complex(0.005, 0.0), cfg.mu, gr);

  const int k_max = 4;
  const EigenvectorResult res = eigenvector_sequence(toy, ms, cfg, k_max);
  REQUIRE(static_cast<int>(res.residuals.size()) == k_max + 1);

  // Psi_0 = Omega, residual bounded by twice the measured interaction norm
  CHECK(std::abs(res.psi[0](0) - Complex(1.0)) == 0.0);
  for (int k = 0; k <= k_max; ++k)
    CHECK(res.residuals[k] <= 2.0 * res.gamma_meas[k] * (1.0 + 1e-9));
  for (int k = 2; k <= k_max; ++k) CHECK(res.residuals[k] <= res.residuals[k - 1] * (1.0 + 1e-9));

  // distance to the vacuum within the product bound
  const double g0 = res.gamma_meas[0];
  const double bound = 32.0 * g0 / cfg.rho * std::exp(32.0 * g0 / cfg.rho);
  CHECK((res.psi.back() - res.psi.front()).norm() <= bound);
  CHECK_FALSE(res.collapse_warning);

  // overlap with the dense ground eigenvector
  const TruncatedFock fock(ms, cfg.n_max);
  const SpectrumResult sp = dense_spectrum(assemble_hamiltonian(toy, fock), true);
  const ComplexVector ground = sp.eigenvectors->col(0);
  const double overlap = std::abs(ground.dot(res.psi_normalized));
  CHECK(overlap >= 0.999);
}
