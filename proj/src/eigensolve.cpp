#include "srg/eigensolve.hpp"

#include <cmath>

namespace srg {

DilationPair gamma_dilation(const TruncatedFock& fock, double rho) {
  if (!fock.modes().is_geometric(rho))
    throw std::domain_error("gamma_dilation: mode grid is not geometric with ratio rho");
  const int d = fock.dim();
  const int G = fock.n_modes();
  ComplexMatrix gamma = ComplexMatrix::Zero(d, d);
  std::vector<int> shifted(G, 0);
  for (int b = 0; b < d; ++b) {
    const std::vector<int>& occ = fock.state(b);
    if (occ[0] != 0) continue;  // would need the shell above kappa_max
    for (int i = 1; i < G; ++i) shifted[i - 1] = occ[i];
    shifted[G - 1] = 0;
    const int a = fock.index_of(shifted);
    gamma(a, b) = 1.0;
  }
  return DilationPair{gamma, gamma.adjoint()};
}

std::vector<bool> gamma_retained_states(const TruncatedFock& fock) {
  const int G = fock.n_modes();
  std::vector<bool> keep(fock.dim());
  for (int b = 0; b < fock.dim(); ++b) keep[b] = fock.state(b)[G - 1] == 0;
  return keep;
}

std::vector<ComplexMatrix> q_chain(const std::vector<KernelChain>& chains,
                                   const TruncatedFock& fock, const RGConfig& cfg) {
  std::vector<ComplexMatrix> out;
  out.reserve(chains.size());
  const Partition part = Partition::hf_cutoff(fock, cfg.rho);
  for (const KernelChain& c : chains) {
    FeshbachPair pair;
    pair.H = assemble_hamiltonian(c, fock);
    pair.T0 = ComplexMatrix::Zero(fock.dim(), fock.dim());
    for (int i = 0; i < fock.dim(); ++i) pair.T0(i, i) = c.w00.eval_r(fock.energy(i), 0);
    pair.part = part;
    out.push_back(q_maps(pair).Q);
  }
  return out;
}

EigenvectorResult eigenvector_sequence(const KernelChain& chain, const ModeSet& modes,
                                       const RGConfig& cfg, int k_max) {
  RGConfig fcfg = cfg;
  fcfg.n_steps = std::max(cfg.n_steps, k_max);
  return eigenvector_sequence(chain, modes, cfg, k_max, run_flow(chain, modes, fcfg));
}

EigenvectorResult eigenvector_sequence(const KernelChain& chain, const ModeSet& modes,
                                       const RGConfig& cfg, int k_max, FlowResult flow) {
  if (k_max < 1) throw std::domain_error("eigenvector_sequence: k_max must be >= 1");
  if (static_cast<int>(flow.chains.size()) + 1 < k_max)
    throw std::domain_error("eigenvector_sequence: flow is shorter than k_max");

  EigenvectorResult out;
  out.flow = std::move(flow);
  out.E = out.flow.H_u + out.flow.e;

  KernelChain shifted = chain;
  shifted.add_constant(-out.E);

  const TruncatedFock fock(modes, cfg.n_max);
  const BanachParams p = cfg.banach();

  std::vector<KernelChain> step_chains;
  step_chains.push_back(shifted);
  for (int j = 0; j + 1 < k_max; ++j) step_chains.push_back(out.flow.chains[j]);
  const std::vector<ComplexMatrix> Q = q_chain(step_chains, fock, cfg);
  const DilationPair gd = gamma_dilation(fock, cfg.rho);
  const ComplexMatrix H0 = assemble_hamiltonian(shifted, fock);

  out.gamma_meas.push_back(chain_norm(shifted, p));
  for (int j = 0; j < k_max; ++j)
    out.gamma_meas.push_back(j < static_cast<int>(out.flow.chains.size())
                                 ? chain_norm(out.flow.chains[j], p)
                                 : 0.0);

  ComplexVector omega = ComplexVector::Zero(fock.dim());
  omega(0) = 1.0;

  for (int k = 0; k <= k_max; ++k) {
    ComplexVector psi = omega;
    for (int j = k - 1; j >= 0; --j) {
      if (j < k - 1) psi = gd.gamma_star * psi;
      psi = Q[j] * psi;
    }
    out.psi.push_back(psi);
    out.residuals.push_back((H0 * psi).norm());
  }

  const double nrm = out.psi.back().norm();
  out.collapse_warning = nrm < 0.5;
  out.psi_normalized = out.psi.back() / nrm;
  return out;
}

}  // namespace srg
