#include "srg/feshbach.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>

#include "srg/cutoff.hpp"

namespace srg {

void Partition::validate(double tol) const {
  const int d = static_cast<int>(chi.rows());
  if (chi.rows() != chi.cols() || chibar.rows() != chibar.cols() || chibar.rows() != d)
    throw std::domain_error("Partition: shape mismatch");
  if ((chi - chi.adjoint()).cwiseAbs().maxCoeff() > tol ||
      (chibar - chibar.adjoint()).cwiseAbs().maxCoeff() > tol)
    throw std::domain_error("Partition: chi and chibar must be Hermitian");
  ComplexMatrix sum = chi * chi + chibar * chibar;
  if ((sum - ComplexMatrix::Identity(d, d)).cwiseAbs().maxCoeff() > tol)
    throw std::domain_error("Partition: chi^2 + chibar^2 must equal the identity");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es_chi(chi, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es_bar(chibar, Eigen::EigenvaluesOnly);
  if (es_chi.eigenvalues().minCoeff() < -tol || es_chi.eigenvalues().maxCoeff() > 1.0 + tol ||
      es_bar.eigenvalues().minCoeff() < -tol || es_bar.eigenvalues().maxCoeff() > 1.0 + tol)
    throw std::domain_error("Partition: spectra must lie in [0, 1]");
  if (chi.cwiseAbs().maxCoeff() == 0.0 || chibar.cwiseAbs().maxCoeff() == 0.0)
    throw std::domain_error("Partition: chi and chibar must be nonzero");
}

Partition Partition::hf_cutoff(const TruncatedFock& fock, double rho) {
  const int d = fock.dim();
  ComplexMatrix chi = ComplexMatrix::Zero(d, d);
  ComplexMatrix bar = ComplexMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const CutoffPair c = cutoff_chi(fock.energy(i), rho);
    chi(i, i) = c.chi;
    bar(i, i) = c.chibar;
  }
  return Partition{std::move(chi), std::move(bar)};
}

ComplexMatrix ran_basis(const ComplexMatrix& chi, double threshold) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(chi);
  if (es.info() != Eigen::Success) throw std::runtime_error("ran_basis: eigensolver failed");
  int rank = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > threshold) ++rank;
  ComplexMatrix U(chi.rows(), rank);
  int c = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > threshold) U.col(c++) = es.eigenvectors().col(i);
  return U;
}

namespace {

double smallest_singular_value(const ComplexMatrix& M) {
  if (M.rows() == 0) return 0.0;
  if (M.rows() >= 16) {
    Eigen::BDCSVD<ComplexMatrix> svd(M);
    return svd.singularValues()(svd.singularValues().size() - 1);
  }
  Eigen::JacobiSVD<ComplexMatrix> svd(M);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

struct BarInverse {
  ComplexMatrix inv;   // supported on Ran chibar
  double smin;
};

BarInverse invert_on_ran_chibar(const FeshbachPair& pair, const ComplexMatrix& W,
                                double invert_tol) {
  const ComplexMatrix hbar = pair.T0 + pair.part.chibar * W * pair.part.chibar;
  const ComplexMatrix Ubar = ran_basis(pair.part.chibar);
  const ComplexMatrix block = Ubar.adjoint() * hbar * Ubar;
  const double smin = smallest_singular_value(block);
  const double scale = std::max(1.0, pair.H.cwiseAbs().maxCoeff());
  if (smin <= invert_tol * scale) throw NotFeshbachPair(smin);
  return BarInverse{Ubar * block.inverse() * Ubar.adjoint(), smin};
}

}  // namespace

FeshbachResult feshbach_map(const FeshbachPair& pair, double invert_tol) {
  const ComplexMatrix W = pair.W();
  const BarInverse bi = invert_on_ran_chibar(pair, W, invert_tol);
  const ComplexMatrix& chi = pair.part.chi;
  const ComplexMatrix& bar = pair.part.chibar;

  FeshbachResult out;
  const ComplexMatrix wchi = W * chi;
  out.F_full = pair.T0 + chi * wchi - chi * W * bar * bi.inv * bar * wchi;
  out.ran_chi = ran_basis(chi);
  out.F_ran = out.ran_chi.adjoint() * out.F_full * out.ran_chi;
  out.hbar_inv = bi.inv;
  out.smin_chibar_block = bi.smin;
  return out;
}

QMaps q_maps(const FeshbachPair& pair, double invert_tol) {
  const ComplexMatrix W = pair.W();
  const BarInverse bi = invert_on_ran_chibar(pair, W, invert_tol);
  const ComplexMatrix& chi = pair.part.chi;
  const ComplexMatrix& bar = pair.part.chibar;
  QMaps q;
  q.Q = chi - bar * bi.inv * bar * W * chi;
  q.Qsharp = chi - chi * W * bar * bi.inv * bar;
  return q;
}

ComplexMatrix resolvent_reconstruct(const FeshbachPair& pair, double invert_tol) {
  const ComplexMatrix W = pair.W();
  const BarInverse bi = invert_on_ran_chibar(pair, W, invert_tol);
  const ComplexMatrix& chi = pair.part.chi;
  const ComplexMatrix& bar = pair.part.chibar;

  const ComplexMatrix barinv_barw = bi.inv * bar * W;
  const ComplexMatrix F_full = pair.T0 + chi * W * chi - chi * W * bar * barinv_barw * chi;
  const ComplexMatrix ran_chi = ran_basis(chi);
  const ComplexMatrix F_ran = ran_chi.adjoint() * F_full * ran_chi;

  const double smin = smallest_singular_value(F_ran);
  const double scale = std::max(1.0, pair.H.cwiseAbs().maxCoeff());
  if (smin <= invert_tol * scale)
    throw std::runtime_error("resolvent_reconstruct: F is singular on Ran chi");

  const ComplexMatrix Q = chi - bar * barinv_barw * chi;
  const ComplexMatrix Qsharp = chi - chi * W * bar * bi.inv * bar;
  const ComplexMatrix f_inv = ran_chi * F_ran.inverse() * ran_chi.adjoint();
  return Q * f_inv * Qsharp + bar * bi.inv * bar;
}

PairCheckReport pair_check(const KernelChain& chain, const TruncatedFock& fock, double rho,
                           const BanachParams& p) {
  FeshbachPair pair;
  pair.H = assemble_hamiltonian(chain, fock);
  pair.T0 = ComplexMatrix::Zero(fock.dim(), fock.dim());
  for (int i = 0; i < fock.dim(); ++i) pair.T0(i, i) = chain.w00.eval_r(fock.energy(i), 0);
  pair.part = Partition::hf_cutoff(fock, rho);

  PairCheckReport rep;
  rep.commutator_norm =
      (pair.T0 * pair.part.chi - pair.part.chi * pair.T0).cwiseAbs().maxCoeff();
  rep.paper_bound = 8.0 / (3.0 * rho);
  rep.polydisc = polydisc_membership(chain, rho / 8.0, 1.0 / 8.0, rho / 8.0, p);
  try {
    const FeshbachResult fr = feshbach_map(pair);
    rep.smin_chibar_block = fr.smin_chibar_block;
    rep.invertible = true;
    rep.inverse_norm = 1.0 / fr.smin_chibar_block;
  } catch (const NotFeshbachPair& e) {
    rep.smin_chibar_block = e.smallest_singular_value;
    rep.invertible = false;
    rep.inverse_norm = std::numeric_limits<double>::infinity();
  }
  return rep;
}

int kernel_dimension(const ComplexMatrix& M, double tol) {
  Eigen::VectorXd sv;
  if (M.rows() >= 16) {
    Eigen::BDCSVD<ComplexMatrix> svd(M);
    sv = svd.singularValues();
  } else {
    Eigen::JacobiSVD<ComplexMatrix> svd(M);
    sv = svd.singularValues();
  }
  const double scale = std::max(sv(0), 1e-300);
  int dim = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) < tol * scale) ++dim;
  return dim;
}

namespace {

// Orthonormal basis of the numerical null space (right singular vectors).
ComplexMatrix null_basis(const ComplexMatrix& M, double tol) {
  Eigen::JacobiSVD<ComplexMatrix> svd(M, Eigen::ComputeFullV);
  const double scale = std::max(svd.singularValues()(0), 1e-300);
  std::vector<int> idx;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) < tol * scale) idx.push_back(i);
  ComplexMatrix N(M.cols(), static_cast<int>(idx.size()));
  for (size_t c = 0; c < idx.size(); ++c) N.col(c) = svd.matrixV().col(idx[c]);
  return N;
}

}  // namespace

IsospectralityReport isospectrality_suite(const FeshbachPair& pair, double rank_tol) {
  const FeshbachResult fr = feshbach_map(pair);
  const QMaps q = q_maps(pair);

  IsospectralityReport rep;
  rep.dim_ker_H = kernel_dimension(pair.H, rank_tol);
  rep.dim_ker_F = kernel_dimension(fr.F_ran, rank_tol);
  rep.intertwine_error = operator_norm(pair.H * q.Q - pair.part.chi * fr.F_full);

  rep.forward_residual = 0.0;
  const ComplexMatrix null_H = null_basis(pair.H, rank_tol);
  for (int c = 0; c < null_H.cols(); ++c) {
    const ComplexVector phi = fr.ran_chi.adjoint() * (pair.part.chi * null_H.col(c));
    rep.forward_residual = std::max(rep.forward_residual, (fr.F_ran * phi).norm());
  }

  rep.backward_residual = 0.0;
  const ComplexMatrix null_F = null_basis(fr.F_ran, rank_tol);
  for (int c = 0; c < null_F.cols(); ++c) {
    const ComplexVector psi = q.Q * (fr.ran_chi * null_F.col(c));
    rep.backward_residual = std::max(rep.backward_residual, (pair.H * psi).norm());
  }
  return rep;
}

}  // namespace srg
