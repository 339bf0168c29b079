#include <cmath>

#include "doctest.h"
#include "srg/checks.hpp"
#include "srg/cutoff.hpp"

using namespace srg;

namespace {

// Chain on a single-shell mode set with unit weight, constant couplings.
struct OneModeSetup {
  ModeSet modes = custom_mode_set({0.5}, {1.0});
  GridPtr grid = std::make_shared<RadialGrid>(
      std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0},
      std::vector<double>{0.0625, 0.125, 0.25, 0.5});
  Complex g{0.01, 0.0};
  KernelChain chain = make_hf_chain(grid);

  OneModeSetup() {
    chain.higher.push_back(Kernel::constant(1, 0, grid, g));
    chain.higher.push_back(Kernel::constant(0, 1, grid, g));
  }
};

}  // namespace

TEST_CASE("generalized_monomial: multiplication operator at p = q = 0") {
  OneModeSetup s;
  const TruncatedFock fock(s.modes, 2);
  const double r = 0.3;
  const ComplexMatrix W = generalized_monomial(s.chain, fock, 1, 0, 0, 0, r, {0.25});
  // chi_1 w10[H_f + r; 0.25] chi_1 with a constant kernel: diagonal
  const int one = fock.index_of({1});
  CHECK(std::abs(W(one, 0)) == 0.0);
  CHECK(std::abs(W(0, 0) - s.g * chi1(0.0) * chi1(0.0)) < 1e-15);
  CHECK(std::abs(W(one, one) - s.g * chi1(0.5) * chi1(0.5)) < 1e-15);
}

TEST_CASE("generalized_monomial matches a hand-built contraction (m=1, q=1)") {
  OneModeSetup s;
  const TruncatedFock fock(s.modes, 2);
  KernelChain chain = s.chain;
  const Complex c(0.2, 0.05);
  chain.higher.push_back(Kernel::constant(1, 1, s.grid, c));

  const double r = 0.1, kext = 0.25;
  const ComplexMatrix W = generalized_monomial(chain, fock, 1, 0, 0, 1, r, {kext});
  // direct: chi_1 sqrt(v) w_{1,1}[H_f + r; kext, kappa] a chi_1
  const auto lad = ladder_matrices(fock);
  ComplexMatrix direct = ComplexMatrix::Zero(fock.dim(), fock.dim());
  for (int b = 0; b < fock.dim(); ++b) {
    for (int a = 0; a < fock.dim(); ++a) {
      Complex amp = lad[0].a(a, b);
      if (amp == Complex(0.0)) continue;
      direct(a, b) = chi1(fock.energy(a)) * chi1(fock.energy(b)) * amp *
                     chain.find(1, 1)->eval(fock.energy(a) + r, {kext, 0.5});
    }
  }
  CHECK((W - direct).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(
      (void)generalized_monomial(s.chain, fock, 1, 1, 0, 0, 0.0, {0.25, 0.25}),
      std::domain_error);
}

TEST_CASE("vacuum_amplitude: single factor, structural zero, one-mode self-energy") {
  OneModeSetup s;
  const double rho = 0.5;

  // L = 1, (m,p,n,q) = (1,0,0,0): edge cutoffs times the scaled kernel.
  {
    WickTermIndex term{{{1, 0, 0, 0}}};
    const double r = 0.5, k = 0.5;
    const Complex V = vacuum_amplitude(term, s.chain, s.modes, rho, r, {k}, {});
    const Complex expect = chi1(rho * (r + k)) * chi1(rho * r) * s.g;
    CHECK(std::abs(V - expect) < 1e-15);
  }

  // Two creation factors cannot return to the vacuum.
  {
    WickTermIndex term{{{0, 1, 0, 0}, {0, 1, 0, 0}}};
    CHECK(vacuum_amplitude(term, s.chain, s.modes, rho, 0.2, {}, {}) == Complex(0.0));
  }

  // L = 2 second-order self-energy at r = 0; kappa/rho = 1 sits atop the
  // chibar transition.
  {
    WickTermIndex term{{{0, 0, 0, 1}, {0, 1, 0, 0}}};
    const Complex V = vacuum_amplitude(term, s.chain, s.modes, rho, 0.0, {}, {});
    const double kappa = 0.5;
    const Complex expect = s.g * s.g * 1.0 * chi1(kappa) * chi1(kappa) *
                           chibar1(kappa / rho) * chibar1(kappa / rho) / Complex(kappa, 0.0);
    CHECK(std::abs(V - expect) < 1e-15);
    CHECK(std::abs(V - s.g * s.g / kappa) < 1e-15);  // both cutoffs are 1 here
  }
}

TEST_CASE("WickTermIndex validation") {
  const WickTermIndex empty_factor{{{0, 0, 0, 0}}};
  CHECK_THROWS_AS(empty_factor.validate(), std::domain_error);
  const WickTermIndex short_series{{{0, 1, 0, 0}}};
  CHECK_THROWS_AS(short_series.validate(), std::domain_error);
  const WickTermIndex ok{{{0, 0, 0, 1}, {0, 1, 0, 0}}};
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("renormalized_chain: fixed line and unstable direction") {
  const double rho = 0.4;
  const ModeSet ms = build_mode_set(8, rho, 1.0);
  const GridPtr gr = RadialGrid::make(17, 2.0, ms);
  RenormOptions opt;
  opt.rho = rho;
  const BanachParams p{0.5, 1, 0.25};

  for (const Complex tau : {Complex(1.0, 0.0), Complex(0.5, 0.0),
                            2.0 * std::exp(Complex(0.0, 3.14159265358979323846 / 7.0))}) {
    KernelChain c = make_hf_chain(gr);
    for (auto& v : c.w00.values()) v *= tau;
    const RenormResult rr = renormalized_chain(c, ms, opt, p);
    CHECK(chain_max_difference(rr.chain, c) < 1e-14);
    CHECK(rr.chain.higher.empty());
  }

  KernelChain c = make_hf_chain(gr);
  const Complex E0(0.012, -0.004);
  c.add_constant(E0);
  const RenormResult rr = renormalized_chain(c, ms, opt, p);
  CHECK(std::abs(rr.chain.vacuum_part() - E0 / rho) == 0.0);
  for (int i = 0; i < gr->nr(); ++i)
    CHECK(std::abs(rr.chain.w00.at(0, i) - (gr->r_nodes[i] + E0 / rho)) < 1e-15);
}

TEST_CASE("renormalized_chain refuses chains whose decimated block is singular") {
  const double rho = 0.4;
  const ModeSet ms = build_mode_set(8, rho, 1.0);
  const GridPtr gr = RadialGrid::make(17, 2.0, ms);
  // w00 vanishes inside the decimated band [0.9 rho, 1]
  KernelChain c = make_hf_chain(gr);
  c.add_constant(Complex(-0.5, 0.0));
  RenormOptions opt;
  opt.rho = rho;
  CHECK_THROWS_AS((void)renormalized_chain(c, ms, opt, BanachParams{0.5, 1, 0.25}),
                  std::domain_error);
}

TEST_CASE("renormalized_chain agrees with the term-by-term vacuum amplitudes") {
  const double rho = 0.4;
  const ModeSet ms = build_mode_set(6, rho, 1.0);
  const GridPtr gr = RadialGrid::make(17, 2.0, ms);
  const KernelChain toy = generate_toy_model(Complex(0.005, 0.0), 0.5, gr);
  RenormOptions opt;
  opt.rho = rho;
  opt.L_max = 3;
  opt.n_max = 3;
  const RenormResult rr = renormalized_chain(toy, ms, opt, BanachParams{0.5, 1, 0.25});

  // (1,0) output at grid points, rebuilt from the surviving terms.
  const std::vector<WickTermIndex> terms = {
      WickTermIndex{{{1, 0, 0, 0}}},
      WickTermIndex{{{0, 0, 0, 1}, {1, 0, 0, 0}, {0, 1, 0, 0}}},
      WickTermIndex{{{1, 0, 0, 0}, {0, 0, 0, 1}, {0, 1, 0, 0}}},
      WickTermIndex{{{0, 0, 0, 1}, {0, 1, 0, 0}, {1, 0, 0, 0}}},
  };
  const int jk = 3;
  const double k_new = gr->k_nodes[jk];
  const Kernel* w10 = rr.chain.find(1, 0);
  REQUIRE(w10 != nullptr);
  for (int ir : {0, 4, 8}) {
    const double r = gr->r_nodes[ir];
    Complex sum(0.0, 0.0);
    for (const auto& t : terms)
      sum += vacuum_amplitude(t, toy, ms, rho, r, {k_new}, {});  // signs all +1 here
    CHECK(std::abs(w10->at(w10->flat_index({jk}), ir) - sum) < 1e-14);
  }
}

TEST_CASE("kernel decimation matches the matrix decimation on the kept sector") {
  const double rho = 0.4;
  RGConfig cfg;
  cfg.rho = rho;
  cfg.xi_override = 0.25;
  cfg.L_max = 3;
  cfg.M_max = 2;
  cfg.n_max = 2;
  const ModeSet ms = build_mode_set(6, rho, 1.0);
  const GridPtr gr = RadialGrid::make(17, 2.0, ms);
  const TruncatedFock fock(ms, 2);

  for (const Complex g : {Complex(0.005, 0.0), Complex(0.004, 0.0008)}) {
    const KernelChain toy = generate_toy_model(g, 0.5, gr);
    const StepResult st = renorm_step(toy, ms, cfg);
    const ComplexMatrix kernel_side = assemble_hamiltonian(st.chain, fock);
    const ComplexMatrix matrix_side = matrix_decimation(toy, fock, rho);
    const double rel =
        retained_frobenius_rel_diff(kernel_side, matrix_side, gamma_retained_states(fock));
    CHECK(rel < 1e-3);
  }
}

TEST_CASE("series terms decay geometrically and outputs stay symmetric") {
  const double rho = 0.4;
  const ModeSet ms = build_mode_set(8, rho, 1.0);
  const GridPtr gr = RadialGrid::make(17, 2.0, ms);
  const KernelChain toy = generate_toy_model(Complex(0.005, 0.0), 0.5, gr);
  RenormOptions opt;
  opt.rho = rho;
  opt.L_max = 3;
  const BanachParams p{0.5, 1, 0.25};
  const RenormResult r1 = renormalized_chain(toy, ms, opt, p);
  const RenormResult r2 = renormalized_chain(r1.chain, ms, opt, p);

  const auto& perL = r2.report.per_L_chain_norm;
  REQUIRE(perL.size() >= 4);
  CHECK(perL[2] < perL[1]);
  CHECK(perL[3] < perL[2]);
  const double c_chi = cutoff_cchi(p.s);
  const double B_formula = c_chi / (rho * (1.0 - 2.0 * p.xi) * (1.0 - 2.0 * p.xi)) *
                           chain_norm(r1.chain, p);
  CHECK(perL[3] / perL[2] <= B_formula);

  for (const Kernel& k : r2.chain.higher) CHECK(is_symmetric(k, 1e-12));
}

TEST_CASE("one-step contraction against the closed-form bounds") {
  const double rho = 0.4;
  const ModeSet ms = build_mode_set(8, rho, 1.0);
  const GridPtr gr = RadialGrid::make(17, 2.0, ms);
  const BanachParams p{0.5, 1, 0.25};
  const KernelChain toy = generate_toy_model(Complex(0.005, 0.0), 0.5, gr);
  RenormOptions opt;
  opt.rho = rho;
  const RenormResult rr = renormalized_chain(toy, ms, opt, p);

  // zero interaction: all corrections vanish
  const RenormResult free = renormalized_chain(make_hf_chain(gr), ms, opt, p);
  CHECK(chain_norm(free.chain, p) == 0.0);
  CHECK(std::abs(free.chain.vacuum_part()) == 0.0);

  const WickDiagnostics d = wick_norm_diagnostics(toy, rr.chain, rho, p);
  CHECK(d.theory_w1_hat <= d.bound_w1);
  CHECK(d.measured_E_shift <= d.bound_E);
  CHECK(d.measured_T_prime <= d.bound_T);

  // the iterated-polydisc map with the computed constant
  const PolydiscReport in = polydisc_membership(toy, rho / 8, 1.0 / 8, rho / 8, p);
  const double alpha2 = 3.0 * d.c_chi * in.w1_norm * in.w1_norm / (2.0 * rho);
  const double beta2 = in.sup_tprime_minus_one + alpha2;
  const double gamma2 = 256.0 * d.c_chi * d.c_chi * std::pow(rho, p.mu) * in.w1_norm;
  const PolydiscReport out =
      polydisc_membership(rr.chain, alpha2 + in.abs_E / rho, beta2, gamma2, p);
  CHECK(out.ok_T);
  CHECK(out.ok_W);
}
