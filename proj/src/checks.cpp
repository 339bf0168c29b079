#include "srg/checks.hpp"

#include <cmath>
#include <sstream>

#include "srg/cutoff.hpp"

namespace srg {

ComplexMatrix matrix_decimation(const KernelChain& chain, const TruncatedFock& fock,
                                double rho) {
  FeshbachPair pair;
  pair.H = assemble_hamiltonian(chain, fock);
  pair.T0 = ComplexMatrix::Zero(fock.dim(), fock.dim());
  for (int i = 0; i < fock.dim(); ++i) pair.T0(i, i) = chain.w00.eval_r(fock.energy(i), 0);
  pair.part = Partition::hf_cutoff(fock, rho);
  const FeshbachResult fr = feshbach_map(pair);
  const DilationPair gd = gamma_dilation(fock, rho);
  return (gd.gamma * fr.F_full * gd.gamma_star) / rho;
}

double retained_frobenius_rel_diff(const ComplexMatrix& A, const ComplexMatrix& B,
                                   const std::vector<bool>& keep) {
  double diff2 = 0.0, ref2 = 0.0;
  for (int j = 0; j < A.cols(); ++j) {
    if (!keep[j]) continue;
    for (int i = 0; i < A.rows(); ++i) {
      if (!keep[i]) continue;
      diff2 += std::norm(A(i, j) - B(i, j));
      ref2 += std::norm(B(i, j));
    }
  }
  return std::sqrt(diff2) / std::max(std::sqrt(ref2), 1e-300);
}

FeshbachPair random_feshbach_pair(int dim, std::mt19937_64& rng, double w_scale,
                                  int planted_kernel_dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  ComplexMatrix R(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) R(i, j) = Complex(g(rng), g(rng));
  const Eigen::HouseholderQR<ComplexMatrix> qr(R);
  ComplexMatrix U = qr.householderQ();

  Eigen::VectorXd c(dim);
  for (int i = 0; i < dim; ++i) c(i) = u(rng);
  c(0) = 1.0;            // keep both partition members nonzero and spread
  c(dim - 1) = 0.0;
  ComplexMatrix chi = ComplexMatrix::Zero(dim, dim);
  ComplexMatrix bar = ComplexMatrix::Zero(dim, dim);
  ComplexMatrix T0 = ComplexMatrix::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    chi(i, i) = c(i);
    bar(i, i) = std::sqrt(1.0 - c(i) * c(i));
    T0(i, i) = Complex(0.7 + u(rng), 0.3 * (u(rng) - 0.5));
  }
  FeshbachPair pair;
  pair.part.chi = U * chi * U.adjoint();
  pair.part.chibar = U * bar * U.adjoint();
  pair.T0 = U * T0 * U.adjoint();

  ComplexMatrix W(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) W(i, j) = w_scale * Complex(g(rng), g(rng)) / std::sqrt(dim);
  pair.H = pair.T0 + W;

  if (planted_kernel_dim > 0) {
    // Multiply by a projector complement so the kernel dimension is known.
    ComplexMatrix P = ComplexMatrix::Identity(dim, dim);
    for (int k = 0; k < planted_kernel_dim; ++k) {
      ComplexVector v(dim);
      for (int i = 0; i < dim; ++i) v(i) = Complex(g(rng), g(rng));
      v.normalize();
      P -= (P * v) * (P * v).adjoint() / (v.adjoint() * P * v)(0, 0);
    }
    pair.H = pair.H * P;
    // tau(H) must stay commuting; keep T0, the kernel plant lives in W.
  }
  return pair;
}

namespace {

struct Suite {
  std::vector<CheckResult> results;

  void add(const std::string& name, bool pass, const std::string& detail) {
    results.push_back({name, pass, detail});
  }
  template <typename F>
  void run(const std::string& name, F&& f) {
    try {
      auto [pass, detail] = f();
      add(name, pass, detail);
    } catch (const std::exception& e) {
      add(name, false, std::string("exception: ") + e.what());
    }
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::vector<CheckResult> run_all_checks(uint64_t seed, int n_random) {
  Suite suite;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  const double rho = 0.4;
  const ModeSet modes = build_mode_set(8, rho, 1.0);
  const GridPtr grid = RadialGrid::make(17, 2.0, modes);
  const BanachParams p{0.5, 1, 0.25};

  suite.run("cutoff-partition", [&]() -> std::pair<bool, std::string> {
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
      const double r = 3.0 * i / 99999.0;
      const CutoffPair c = cutoff_chi(r, 1.0);
      worst = std::max(worst, std::abs(c.chi * c.chi + c.chibar * c.chibar - 1.0));
    }
    return {worst < 1e-14, "max |chi^2+chibar^2-1| = " + fmt(worst)};
  });

  suite.run("cutoff-plateaus", [&]() -> std::pair<bool, std::string> {
    const bool ok = chi1(0.5) == 1.0 && chi1(0.9) == 1.0 && chi1(1.0) == 0.0 &&
                    chi1(1.2) == 0.0 && chibar1(0.5) == 0.0;
    return {ok, "chi1(0.5)=" + fmt(chi1(0.5)) + " chi1(1.2)=" + fmt(chi1(1.2))};
  });

  suite.run("kernel-norm-triangle", [&]() -> std::pair<bool, std::string> {
    double worst = 0.0;
    for (int t = 0; t < n_random; ++t) {
      const int m = static_cast<int>(u01(rng) * 2), n = static_cast<int>(u01(rng) * 2);
      if (m + n < 1) continue;
      Kernel a = random_kernel(m, n, grid, rng, p.mu);
      Kernel b = random_kernel(m, n, grid, rng, p.mu);
      Kernel sum = a;
      for (size_t i = 0; i < sum.values().size(); ++i) sum.values()[i] += b.values()[i];
      const double excess = norm_mu_s(sum, p) - norm_mu_s(a, p) - norm_mu_s(b, p);
      worst = std::max(worst, excess);
      const Complex c(u01(rng) * 2.0 - 1.0, u01(rng) * 2.0 - 1.0);
      Kernel scaled = a;
      for (auto& v : scaled.values()) v *= c;
      worst = std::max(worst,
                       std::abs(norm_mu_s(scaled, p) - std::abs(c) * norm_mu_s(a, p)));
    }
    return {worst < 1e-10, "worst violation = " + fmt(worst)};
  });

  suite.run("chain-norm-monotone", [&]() -> std::pair<bool, std::string> {
    double worst = 0.0;
    for (int t = 0; t < n_random / 4 + 1; ++t) {
      KernelChain c = random_chain(grid, rng, 2, 1.0, 0.1, false);
      const BanachParams lo{0.25, 0, 0.5};
      const BanachParams hi{1.0, 1, 0.25};
      worst = std::max(worst, chain_norm(c, lo) - chain_norm(c, hi));
    }
    return {worst <= 1e-12, "worst (low - high) = " + fmt(worst)};
  });

  suite.run("symmetrize-idempotent", [&]() -> std::pair<bool, std::string> {
    double worst = 0.0, norm_excess = 0.0;
    for (int t = 0; t < n_random / 4 + 1; ++t) {
      Kernel raw(2, 0, grid);
      for (auto& v : raw.values()) v = Complex(u01(rng) - 0.5, u01(rng) - 0.5);
      Kernel s1 = symmetrize(raw);
      Kernel s2 = symmetrize(s1);
      for (size_t i = 0; i < s1.values().size(); ++i)
        worst = std::max(worst, std::abs(s1.values()[i] - s2.values()[i]));
      norm_excess = std::max(norm_excess, norm_mu_s(s1, p) - norm_mu_s(raw, p));
    }
    return {worst < 1e-14 && norm_excess <= 1e-12,
            "idempotency " + fmt(worst) + ", norm excess " + fmt(norm_excess)};
  });

  suite.run("scaling-law-monomial", [&]() -> std::pair<bool, std::string> {
    double worst = 0.0;
    for (double mu : {0.25, 0.5, 1.0}) {
      const ModeSet ms = build_mode_set(8, rho, 1.0);
      const GridPtr gr = RadialGrid::make(17, 2.0, ms);
      KernelChain c = make_hf_chain(gr);
      c.higher.push_back(Kernel::from_function(
          1, 0, gr, [&](double, const std::vector<double>& k) { return std::pow(k[0], mu); }));
      const BanachParams pm{mu, 0, 0.25};
      const KernelChain sc = scale_chain(c, rho);
      const double lhs = norm_mu_s(sc.higher[0], pm);
      const double rhs = std::pow(rho, mu) * norm_mu_s(c.higher[0], pm);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    return {worst < 1e-12, "max |equality gap| = " + fmt(worst)};
  });

  suite.run("scaling-law-contraction", [&]() -> std::pair<bool, std::string> {
    double worst = -1.0;
    for (int t = 0; t < n_random / 4 + 1; ++t) {
      KernelChain c = random_chain(grid, rng, 2, p.mu, 0.05, false);
      const KernelChain sc = scale_chain(c, rho);
      for (const Kernel& k : sc.higher) {
        const Kernel* in = c.find(k.m(), k.n());
        const double bound = std::pow(rho, k.order() + p.mu - 1.0) * norm_mu_s(*in, p);
        worst = std::max(worst, norm_mu_s(k, p) - bound * (1.0 + 1e-12));
      }
    }
    return {worst <= 0.0, "worst excess over bound = " + fmt(worst)};
  });

  suite.run("split-reassemble", [&]() -> std::pair<bool, std::string> {
    KernelChain c = random_chain(grid, rng, 2, p.mu, 0.05, false);
    c.add_constant(Complex(0.3, -0.1));
    const SplitETW s = split_etw(c);
    double worst = 0.0;
    for (int i = 0; i < grid->nr(); ++i)
      worst = std::max(worst, std::abs(s.E + s.T.at(0, i) - c.w00.at(0, i)));
    worst = std::max(worst, std::abs(s.T.at(0, 0)));
    return {worst == 0.0, "max reassembly gap = " + fmt(worst)};
  });

  suite.run("ccr-untruncated", [&]() -> std::pair<bool, std::string> {
    const ModeSet ms = build_mode_set(4, rho, 1.0);
    const TruncatedFock fock(ms, 3);
    const auto ladders = ladder_matrices(fock);
    double worst = 0.0;
    for (int i = 0; i < ms.size(); ++i)
      for (int j = 0; j < ms.size(); ++j) {
        ComplexMatrix comm =
            ladders[i].a * ladders[j].adag - ladders[j].adag * ladders[i].a;
        if (i == j) comm -= ComplexMatrix::Identity(fock.dim(), fock.dim());
        for (int b = 0; b < fock.dim(); ++b) {
          if (fock.total_bosons(b) > fock.n_max() - 1) continue;
          for (int a = 0; a < fock.dim(); ++a)
            if (fock.total_bosons(a) <= fock.n_max() - 1)
              worst = std::max(worst, std::abs(comm(a, b)));
        }
      }
    return {worst < 1e-13, "max CCR deviation = " + fmt(worst)};
  });

  suite.run("hermitian-assembly", [&]() -> std::pair<bool, std::string> {
    const TruncatedFock fock(modes, 2);
    KernelChain c = random_chain(grid, rng, 2, p.mu, 0.05, true);
    const ComplexMatrix H = assemble_hamiltonian(c, fock);
    const double dev = (H - H.adjoint()).cwiseAbs().maxCoeff();
    return {dev < 1e-12, "max |H - H*| = " + fmt(dev)};
  });

  suite.run("interaction-operator-bound", [&]() -> std::pair<bool, std::string> {
    const TruncatedFock fock(modes, 2);
    double worst = -1.0;
    for (int t = 0; t < std::min(n_random / 50 + 1, 8); ++t) {
      KernelChain c = random_chain(grid, rng, 2, p.mu, 0.05, false);
      const ComplexMatrix H = assemble_hamiltonian(c, fock);
      ComplexMatrix T = ComplexMatrix::Zero(fock.dim(), fock.dim());
      for (int i = 0; i < fock.dim(); ++i) T(i, i) = c.w00.eval_r(fock.energy(i), 0);
      int max_order = 1;
      for (const Kernel& k : c.higher) max_order = std::max(max_order, k.order());
      const double c_quad = std::pow(modes.total_weight(), 0.5 * max_order);
      BanachParams p0 = p;
      p0.s = 0;
      const double rhs = c_quad * p.xi * chain_norm(c, p0);
      worst = std::max(worst, operator_norm(H - T) - rhs);
    }
    return {worst <= 0.0, "worst excess = " + fmt(worst)};
  });

  suite.run("pull-through", [&]() -> std::pair<bool, std::string> {
    const TruncatedFock fock(modes, 3);
    double worst = 0.0;
    worst = std::max(worst, pull_through_check([](double) { return Complex(1.0); }, fock, 2));
    worst = std::max(worst, pull_through_check([](double r) { return Complex(r); }, fock, 1));
    worst = std::max(
        worst, pull_through_check([](double r) { return Complex(chi1(r)); }, fock, 3));
    return {worst < 1e-12, "max pull-through deviation = " + fmt(worst)};
  });

  suite.run("feshbach-intertwine", [&]() -> std::pair<bool, std::string> {
    double worst = 0.0;
    for (int t = 0; t < n_random / 10 + 1; ++t) {
      const FeshbachPair pair = random_feshbach_pair(12, rng);
      const FeshbachResult fr = feshbach_map(pair);
      const QMaps q = q_maps(pair);
      const double err = operator_norm(pair.H * q.Q - pair.part.chi * fr.F_full);
      worst = std::max(worst, err / (operator_norm(pair.H) + 1.0));
    }
    return {worst < 1e-10, "max relative intertwine error = " + fmt(worst)};
  });

  suite.run("feshbach-reconstruct", [&]() -> std::pair<bool, std::string> {
    double worst = 0.0;
    for (int t = 0; t < n_random / 10 + 1; ++t) {
      const FeshbachPair pair = random_feshbach_pair(12, rng);
      Eigen::JacobiSVD<ComplexMatrix> svd(pair.H);
      const double cond = svd.singularValues()(0) /
                          svd.singularValues()(svd.singularValues().size() - 1);
      if (cond > 1e8) continue;
      const ComplexMatrix direct = pair.H.inverse();
      const ComplexMatrix rec = resolvent_reconstruct(pair);
      worst = std::max(worst, operator_norm(rec - direct) / operator_norm(direct));
    }
    return {worst < 1e-10, "max relative reconstruction error = " + fmt(worst)};
  });

  suite.run("feshbach-kernel-dim", [&]() -> std::pair<bool, std::string> {
    bool ok = true;
    std::string detail;
    for (int planted : {0, 1, 2}) {
      const FeshbachPair pair = random_feshbach_pair(10, rng, 0.15, planted);
      const IsospectralityReport rep = isospectrality_suite(pair);
      if (rep.dim_ker_H != planted || rep.dim_ker_F != planted) {
        ok = false;
        detail = "planted " + std::to_string(planted) + " got H:" +
                 std::to_string(rep.dim_ker_H) + " F:" + std::to_string(rep.dim_ker_F);
      }
    }
    return {ok, ok ? "kernel dimensions transported" : detail};
  });

  suite.run("schur-classical", [&]() -> std::pair<bool, std::string> {
    std::normal_distribution<double> gs(0.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < n_random / 10 + 1; ++t) {
      const int d = 10, keep = 4;
      ComplexMatrix H(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          H(i, j) = Complex(gs(rng), gs(rng)) + (i == j ? Complex(4.0, 0.0) : Complex(0.0));
      FeshbachPair pair;
      pair.H = H;
      pair.T0 = ComplexMatrix::Zero(d, d);
      pair.part.chi = ComplexMatrix::Zero(d, d);
      pair.part.chibar = ComplexMatrix::Zero(d, d);
      for (int i = 0; i < d; ++i) (i < keep ? pair.part.chi : pair.part.chibar)(i, i) = 1.0;
      const FeshbachResult fr = feshbach_map(pair);
      const ComplexMatrix A = H.topLeftCorner(keep, keep);
      const ComplexMatrix B = H.topRightCorner(keep, d - keep);
      const ComplexMatrix C = H.bottomLeftCorner(d - keep, keep);
      const ComplexMatrix D = H.bottomRightCorner(d - keep, d - keep);
      const ComplexMatrix schur = A - B * D.inverse() * C;
      worst = std::max(worst, (fr.F_full.topLeftCorner(keep, keep) - schur)
                                  .cwiseAbs()
                                  .maxCoeff());
    }
    return {worst < 1e-12, "max |F - Schur| = " + fmt(worst)};
  });

  suite.run("fixed-line", [&]() -> std::pair<bool, std::string> {
    RGConfig cfg;
    cfg.rho = rho;
    cfg.xi_override = 0.25;
    cfg.G = modes.size();
    cfg.n_max = 3;
    double worst = 0.0;
    for (const Complex tau :
         {Complex(1.0, 0.0), Complex(0.5, 0.0),
          2.0 * std::exp(Complex(0.0, 3.14159265358979323846 / 7.0))}) {
      KernelChain c = make_hf_chain(grid);
      for (auto& v : c.w00.values()) v *= tau;
      const StepResult st = renorm_step(c, modes, cfg);
      worst = std::max(worst, chain_max_difference(st.chain, c));
    }
    return {worst < 1e-14, "max fixed-line drift = " + fmt(worst)};
  });

  suite.run("unstable-direction", [&]() -> std::pair<bool, std::string> {
    RGConfig cfg;
    cfg.rho = rho;
    cfg.xi_override = 0.25;
    KernelChain c = make_hf_chain(grid);
    const Complex E0(0.01, 0.002);
    c.add_constant(E0);
    const StepResult st = renorm_step(c, modes, cfg);
    const double dev = std::abs(st.chain.vacuum_part() - E0 / rho);
    return {dev < 1e-15, "|E' - E/rho| = " + fmt(dev)};
  });

  suite.run("gamma-isometry", [&]() -> std::pair<bool, std::string> {
    const TruncatedFock fock(modes, 3);
    const DilationPair gd = gamma_dilation(fock, rho);
    const ComplexMatrix prod = gd.gamma_star * gd.gamma;
    double worst = 0.0;
    for (int b = 0; b < fock.dim(); ++b) {
      if (fock.state(b)[0] != 0) continue;  // outside Gamma's kept set
      for (int a = 0; a < fock.dim(); ++a) {
        if (fock.state(a)[0] != 0) continue;
        const Complex expect = a == b ? Complex(1.0) : Complex(0.0);
        worst = std::max(worst, std::abs(prod(a, b) - expect));
      }
    }
    return {worst < 1e-13, "max |Gamma*Gamma - 1| on kept states = " + fmt(worst)};
  });

  suite.run("decimation-oracle-smoke", [&]() -> std::pair<bool, std::string> {
    RGConfig cfg;
    cfg.rho = rho;
    cfg.xi_override = 0.25;
    cfg.L_max = 3;
    cfg.M_max = 2;
    cfg.n_max = 2;
    const ModeSet ms = build_mode_set(6, rho, 1.0);
    const GridPtr gr = RadialGrid::make(17, 2.0, ms);
    const TruncatedFock fock(ms, 2);
    const KernelChain toy = generate_toy_model(Complex(0.005, 0.0), 0.5, gr);
    const StepResult st = renorm_step(toy, ms, cfg);
    const ComplexMatrix kernel_side = assemble_hamiltonian(st.chain, fock);
    const ComplexMatrix matrix_side = matrix_decimation(toy, fock, rho);
    const double rel =
        retained_frobenius_rel_diff(kernel_side, matrix_side, gamma_retained_states(fock));
    return {rel < 1e-3, "retained-sector relative Frobenius difference = " + fmt(rel)};
  });

  return suite.results;
}

}  // namespace srg
