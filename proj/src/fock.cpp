#include "srg/fock.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "srg/cutoff.hpp"

namespace srg {

namespace {

void enumerate_states(int mode, int remaining, std::vector<int>& occ,
                      std::vector<std::vector<int>>& out) {
  if (mode == static_cast<int>(occ.size())) {
    out.push_back(occ);
    return;
  }
  for (int n = 0; n <= remaining; ++n) {
    occ[mode] = n;
    enumerate_states(mode + 1, remaining - n, occ, out);
  }
  occ[mode] = 0;
}

}  // namespace

uint64_t TruncatedFock::key_of(const std::vector<int>& occ) {
  // Pack as a sorted list of (mode+1) bytes; fits G <= 254, n_max <= 8.
  uint64_t key = 0;
  int shift = 0;
  for (int mode = 0; mode < static_cast<int>(occ.size()); ++mode) {
    for (int c = 0; c < occ[mode]; ++c) {
      key |= static_cast<uint64_t>(mode + 1) << shift;
      shift += 8;
    }
  }
  return key;
}

TruncatedFock::TruncatedFock(ModeSet modes, int n_max)
    : modes_(std::move(modes)), n_max_(n_max) {
  if (n_max_ < 1) throw std::domain_error("TruncatedFock: n_max must be >= 1");
  if (n_max_ > 8) throw std::domain_error("TruncatedFock: n_max > 8 not supported");
  std::vector<int> occ(modes_.size(), 0);
  enumerate_states(0, n_max_, occ, basis_);
  std::sort(basis_.begin(), basis_.end());
  energy_.resize(basis_.size());
  totals_.resize(basis_.size());
  for (size_t i = 0; i < basis_.size(); ++i) {
    double e = 0.0;
    int t = 0;
    for (int mode = 0; mode < modes_.size(); ++mode) {
      e += basis_[i][mode] * modes_.kappa[mode];
      t += basis_[i][mode];
    }
    energy_[i] = e;
    totals_[i] = t;
    lookup_.emplace(key_of(basis_[i]), static_cast<int>(i));
  }
}

int TruncatedFock::index_of(const std::vector<int>& occ) const {
  auto it = lookup_.find(key_of(occ));
  return it == lookup_.end() ? -1 : it->second;
}

std::vector<LadderPair> ladder_matrices(const TruncatedFock& fock) {
  const int d = fock.dim();
  const int G = fock.n_modes();
  std::vector<LadderPair> out(G);
  for (int mode = 0; mode < G; ++mode) {
    out[mode].a = ComplexMatrix::Zero(d, d);
    out[mode].adag = ComplexMatrix::Zero(d, d);
  }
  std::vector<int> occ;
  for (int b = 0; b < d; ++b) {
    occ = fock.state(b);
    for (int mode = 0; mode < G; ++mode) {
      const int n = occ[mode];
      if (n > 0) {
        occ[mode] = n - 1;
        const int target = fock.index_of(occ);
        occ[mode] = n;
        out[mode].a(target, b) = std::sqrt(static_cast<double>(n));
      }
      occ[mode] = n + 1;
      const int target = fock.index_of(occ);
      occ[mode] = n;
      if (target >= 0) out[mode].adag(target, b) = std::sqrt(static_cast<double>(n + 1));
    }
  }
  return out;
}

ComplexMatrix build_hf(const TruncatedFock& fock) {
  ComplexMatrix h = ComplexMatrix::Zero(fock.dim(), fock.dim());
  for (int i = 0; i < fock.dim(); ++i) h(i, i) = fock.energy(i);
  return h;
}

namespace {

// Checks the kernel grid carries every shell modulus and returns the k-node
// index for each mode.
std::vector<int> mode_to_node(const Kernel& w, const TruncatedFock& fock) {
  const auto& knodes = w.grid().k_nodes;
  std::vector<int> map(fock.n_modes());
  for (int mode = 0; mode < fock.n_modes(); ++mode) {
    const double kappa = fock.modes().kappa[mode];
    const auto it = std::lower_bound(knodes.begin(), knodes.end(), kappa * (1.0 - 1e-12));
    if (it == knodes.end() || std::abs(*it - kappa) > 1e-12 * kappa)
      throw std::domain_error("assemble_monomial: kernel grid does not carry the shell moduli");
    map[mode] = static_cast<int>(it - knodes.begin());
  }
  return map;
}

// Ordered tuples (t_1..t_len) over [0, G); calls f(tuple).
template <typename F>
void for_each_tuple(int G, int len, std::vector<int>& tuple, F&& f, int pos = 0) {
  if (pos == len) {
    f(tuple);
    return;
  }
  for (int i = 0; i < G; ++i) {
    tuple[pos] = i;
    for_each_tuple(G, len, tuple, f, pos + 1);
  }
}

}  // namespace

ComplexMatrix assemble_monomial(const Kernel& w, const TruncatedFock& fock) {
  if (w.order() < 1) throw std::domain_error("assemble_monomial: need m+n >= 1");
  const std::vector<int> node = mode_to_node(w, fock);
  const int d = fock.dim();
  const int G = fock.n_modes();
  const int m = w.m(), n = w.n();
  ComplexMatrix M = ComplexMatrix::Zero(d, d);

  std::vector<int> ann(n), cre(m), kidx(m + n), occ;
  std::vector<double> sqv(G);
  for (int i = 0; i < G; ++i) sqv[i] = std::sqrt(fock.modes().weight[i]);

  for (int b = 0; b < d; ++b) {
    for_each_tuple(G, n, ann, [&](const std::vector<int>& jt) {
      occ = fock.state(b);
      double amp_a = 1.0;
      for (int s = 0; s < n; ++s) {
        const int mode = jt[s];
        if (occ[mode] == 0) {
          amp_a = 0.0;
          break;
        }
        amp_a *= std::sqrt(static_cast<double>(occ[mode]));
        --occ[mode];
      }
      if (amp_a == 0.0) return;
      const int mid = fock.index_of(occ);
      const double e_mid = fock.energy(mid);
      double vprod_a = 1.0;
      for (int s = 0; s < n; ++s) vprod_a *= sqv[jt[s]];
      for (int s = 0; s < n; ++s) kidx[m + s] = node[jt[s]];

      for_each_tuple(G, m, cre, [&](const std::vector<int>& it) {
        occ = fock.state(mid);
        double amp_c = 1.0;
        bool dead = false;
        for (int s = m - 1; s >= 0; --s) {
          const int mode = it[s];
          amp_c *= std::sqrt(static_cast<double>(occ[mode] + 1));
          ++occ[mode];
        }
        int total = 0;
        for (int x : occ) total += x;
        if (total > fock.n_max()) dead = true;
        if (dead) return;
        const int a = fock.index_of(occ);
        double vprod = vprod_a;
        for (int s = 0; s < m; ++s) vprod *= sqv[it[s]];
        for (int s = 0; s < m; ++s) kidx[s] = node[it[s]];
        const Complex val = w.eval_r(e_mid, w.flat_index(kidx));
        M(a, b) += vprod * amp_a * amp_c * val;
      });
    });
  }
  return M;
}

ComplexMatrix assemble_hamiltonian(const KernelChain& chain, const TruncatedFock& fock,
                                   double rho_outer) {
  const int d = fock.dim();
  ComplexMatrix H = ComplexMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i) H(i, i) = chain.w00.eval_r(fock.energy(i), 0);

  if (chain.higher.empty()) return H;
  Eigen::VectorXd chi(d);
  for (int i = 0; i < d; ++i) chi(i) = cutoff_chi(fock.energy(i), rho_outer).chi;
  for (const Kernel& k : chain.higher) {
    ComplexMatrix W = assemble_monomial(k, fock);
    for (int b = 0; b < d; ++b)
      for (int a = 0; a < d; ++a) H(a, b) += chi(a) * W(a, b) * chi(b);
  }
  return H;
}

SpectrumResult dense_spectrum(const ComplexMatrix& M, bool want_vectors, int dim_cap) {
  if (M.rows() != M.cols()) throw std::domain_error("dense_spectrum: matrix must be square");
  if (M.rows() > dim_cap) throw std::domain_error("dense_spectrum: dimension exceeds cap");

  SpectrumResult out;
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  out.hermitian = (M - M.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * scale;

  if (out.hermitian) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es;
    es.compute(M, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("dense_spectrum: symmetric eigensolver failed to converge");
    out.eigenvalues.reserve(M.rows());
    for (int i = 0; i < M.rows(); ++i) out.eigenvalues.emplace_back(es.eigenvalues()(i), 0.0);
    if (want_vectors) out.eigenvectors = es.eigenvectors();
    return out;
  }

  Eigen::ComplexEigenSolver<ComplexMatrix> es(M, want_vectors);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("dense_spectrum: eigensolver failed to converge");
  std::vector<int> order(M.rows());
  for (int i = 0; i < M.rows(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Complex ea = es.eigenvalues()(a), eb = es.eigenvalues()(b);
    if (ea.real() != eb.real()) return ea.real() < eb.real();
    return ea.imag() < eb.imag();
  });
  out.eigenvalues.reserve(M.rows());
  for (int i : order) out.eigenvalues.push_back(es.eigenvalues()(i));
  if (want_vectors) {
    ComplexMatrix V(M.rows(), M.cols());
    for (int c = 0; c < M.cols(); ++c) V.col(c) = es.eigenvectors().col(order[c]);
    out.eigenvectors = V;
  }
  return out;
}

double operator_norm(const ComplexMatrix& M) {
  if (M.rows() >= 16) return Eigen::BDCSVD<ComplexMatrix>(M).singularValues()(0);
  return M.jacobiSvd().singularValues()(0);
}

OperatorBoundReport operator_bound_check(const Kernel& w, const TruncatedFock& fock,
                                         double lambda, double mu, double rho) {
  if (lambda <= 0.0) throw std::domain_error("operator_bound_check: lambda must be positive");
  const ComplexMatrix W = assemble_monomial(w, fock);
  const int d = fock.dim();
  const int m = w.m(), n = w.n();

  Eigen::VectorXd left(d), right(d), chi(d);
  for (int i = 0; i < d; ++i) {
    const double e = fock.energy(i);
    left(i) = std::pow(e + lambda, -0.5 * m);
    right(i) = std::pow(e + lambda, -0.5 * n);
    chi(i) = cutoff_chi(e, rho).chi;
  }
  ComplexMatrix sandwiched = left.asDiagonal() * W * right.asDiagonal();
  ComplexMatrix cut = chi.asDiagonal() * W * chi.asDiagonal();

  OperatorBoundReport rep;
  rep.c_quad_mass = std::pow(fock.modes().total_weight(), 0.5 * (m + n));
  double dispersion_mass = 0.0;
  for (int i = 0; i < fock.n_modes(); ++i)
    dispersion_mass += fock.modes().weight[i] / fock.modes().kappa[i];
  rep.c_quad_sharp = std::pow(dispersion_mass, 0.5 * (m + n));
  BanachParams p0{0.0, 0, 0.5};
  BanachParams pmu{mu, 0, 0.5};
  double fact = 1.0;
  for (int i = 2; i <= m; ++i) fact *= i;
  for (int i = 2; i <= n; ++i) fact *= i;

  rep.lhs_resolvent = operator_norm(sandwiched);
  const double sup_w = norm_mu_s(w, p0);
  rep.rhs_resolvent = rep.c_quad_sharp * sup_w;
  rep.rhs_resolvent_mass = rep.c_quad_mass * sup_w;
  rep.ok_resolvent = rep.lhs_resolvent <= rep.rhs_resolvent * (1.0 + 1e-12);

  rep.lhs_cutoff = operator_norm(cut);
  rep.rhs_cutoff = rep.c_quad_mass * std::pow(rho, (m + n) * (1.0 + mu)) / std::sqrt(fact) *
                   norm_mu_s(w, pmu);
  rep.ok_cutoff = rep.lhs_cutoff <= rep.rhs_cutoff * (1.0 + 1e-12);
  return rep;
}

double pull_through_check(const std::function<Complex(double)>& F, const TruncatedFock& fock,
                          int mode) {
  if (mode < 0 || mode >= fock.n_modes())
    throw std::domain_error("pull_through_check: mode out of range");
  const double kappa = fock.modes().kappa[mode];
  const int d = fock.dim();

  double max_dev = 0.0;
  std::vector<int> occ;
  for (int b = 0; b < d; ++b) {
    if (fock.total_bosons(b) > fock.n_max() - 1) continue;
    occ = fock.state(b);
    const int nb = occ[mode];
    // (a F[H_f] - F[H_f + kappa] a)|b> is supported on b minus one boson.
    const Complex lhs = nb > 0 ? std::sqrt(static_cast<double>(nb)) * F(fock.energy(b))
                               : Complex(0.0);
    Complex rhs(0.0);
    if (nb > 0) {
      occ[mode] = nb - 1;
      const int t = fock.index_of(occ);
      rhs = std::sqrt(static_cast<double>(nb)) * F(fock.energy(t) + kappa);
    }
    max_dev = std::max(max_dev, std::abs(lhs - rhs));
  }
  return max_dev;
}

}  // namespace srg
