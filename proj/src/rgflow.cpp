#include "srg/rgflow.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "srg/cutoff.hpp"

namespace srg {

double RGConfig::xi() const {
  if (xi_override) return *xi_override;
  return std::sqrt(rho) / (4.0 * cutoff_cchi(s));
}

RenormOptions RGConfig::renorm_options(bool with_estimates) const {
  RenormOptions o;
  o.rho = rho;
  o.L_max = L_max;
  o.M_max = M_max;
  o.n_max = n_max;
  o.prune_tol = prune_tol;
  o.check_polydisc = true;
  o.estimate_dropped = with_estimates;
  return o;
}

void RGConfig::validate() const {
  if (rho <= 0.0 || rho > 0.5) throw std::domain_error("RGConfig: rho must lie in (0, 1/2]");
  if (mu <= 0.0) throw std::domain_error("RGConfig: mu must be positive");
  if (s < 1 || s > 2) throw std::domain_error("RGConfig: s must be 1 or 2");
  const double x = xi();
  if (x <= 0.0 || x >= 1.0) throw std::domain_error("RGConfig: xi must lie in (0, 1)");
  if (n_steps < 1) throw std::domain_error("RGConfig: n_steps must be >= 1");
}

StepResult renorm_step(const KernelChain& chain, const ModeSet& modes, const RGConfig& cfg,
                       bool with_estimates) {
  RenormOptions opt = cfg.renorm_options(with_estimates);
  RenormResult rr = renormalized_chain(chain, modes, opt, cfg.banach());
  StepResult out{std::move(rr.chain), rr.report, PolydiscReport{}};
  out.polydisc = polydisc_membership(out.chain, cfg.rho / 8.0, 1.0 / 8.0, cfg.rho / 8.0,
                                     cfg.banach());
  return out;
}

EnEvalResult En_eval(const KernelChain& chain_s, Complex lambda, int n, const ModeSet& modes,
                     const RGConfig& cfg, bool keep_chains, bool with_estimates) {
  EnEvalResult out;
  KernelChain cur = chain_s;
  cur.add_constant(-lambda);
  out.E_seq.push_back(cur.vacuum_part());

  double rho_pow = 1.0;
  for (int j = 1; j <= n; ++j) {
    rho_pow *= cfg.rho;
    StepResult st = [&] {
      try {
        return renorm_step(cur, modes, cfg, with_estimates);
      } catch (const std::domain_error& e) {
        std::ostringstream os;
        os << "flow left the admissible domain at step " << j << ": " << e.what();
        throw FlowError(j, os.str());
      }
    }();
    cur = std::move(st.chain);
    out.E_seq.push_back(cur.vacuum_part());
    out.dropped += rho_pow * (st.report.dropped_order_estimate +
                              st.report.neumann_tail_estimate + st.report.pruned_bound);
    if (keep_chains) out.chains.push_back(cur);
  }
  out.value = out.E_seq.back();
  return out;
}

SolveEnResult solve_en(const KernelChain& chain_s, int n, Complex e_prev, const ModeSet& modes,
                       const RGConfig& cfg) {
  const double rho_n = std::pow(cfg.rho, n);
  Complex lambda = e_prev;
  double alpha_meas = 0.0;
  double prev_delta = std::numeric_limits<double>::infinity();
  int growth_streak = 0;

  for (int iter = 1; iter <= cfg.fp_max_iter; ++iter) {
    const EnEvalResult ev = En_eval(chain_s, lambda, n, modes, cfg);
    if (iter == 1 && n >= 1) {
      const Complex delta_n = ev.E_seq[n] - ev.E_seq[n - 1] / cfg.rho;
      alpha_meas = std::abs(delta_n);
    }
    const Complex next = lambda + rho_n * ev.value;
    const double delta = std::abs(next - lambda);
    lambda = next;
    if (delta < cfg.fp_tol) return SolveEnResult{lambda, alpha_meas, iter};
    if (delta > prev_delta && delta > 100.0 * cfg.fp_tol) {
      if (++growth_streak >= 3)
        throw FlowError(n, "solve_en: fixed-point iteration is not contracting");
    } else {
      growth_streak = 0;
    }
    prev_delta = delta;
  }
  throw FlowError(n, "solve_en: fixed-point iteration hit the iteration cap");
}

FlowResult run_flow(const KernelChain& chain, const ModeSet& modes, const RGConfig& cfg) {
  cfg.validate();
  FlowResult out;
  out.H_u = chain.vacuum_part();
  KernelChain chain_s = chain;
  chain_s.add_constant(-out.H_u);

  const BanachParams p = cfg.banach();
  Complex e_prev(0.0, 0.0);

  for (int n = 1; n <= cfg.n_steps; ++n) {
    const SolveEnResult sr = solve_en(chain_s, n, e_prev, modes, cfg);
    const double rho_n = std::pow(cfg.rho, n);
    const double increment = std::abs(sr.e_n - e_prev);
    if (increment > 2.0 * sr.alpha_meas * rho_n + 10.0 * cfg.fp_tol) {
      std::ostringstream os;
      os << "run_flow: |e_" << n << " - e_" << (n - 1) << "| = " << increment
         << " exceeds 2 alpha_meas rho^n = " << 2.0 * sr.alpha_meas * rho_n;
      throw FlowError(n, os.str());
    }

    // Working pass at the solved lambda; keeps the chain sequence.
    const EnEvalResult ev = En_eval(chain_s, sr.e_n, n, modes, cfg, true, true);
    const KernelChain& wn = ev.chains.back();

    StepRecord rec;
    rec.n = n;
    rec.E_n = ev.E_seq[n];
    rec.e_n = sr.e_n;
    rec.abs_E = std::abs(ev.E_seq[n]);
    rec.sup_tprime = sup_tprime_minus_one(wn);
    rec.w1_norm = chain_norm(wn, p);
    rec.dropped = ev.dropped;
    rec.alpha_meas = sr.alpha_meas;
    rec.picard_iters = sr.iterations;

    // tau_n(0) = T'(0) one-sided; flatness over 0 < r <= 1.
    {
      const auto& g = wn.grid();
      const Complex E = wn.w00.at(0, 0);
      const double h1 = g.r_nodes[1] - g.r_nodes[0];
      const double h2 = g.r_nodes[2] - g.r_nodes[1];
      const Complex t0 = wn.w00.at(0, 0);
      const Complex t1 = wn.w00.at(0, 1);
      const Complex t2 = wn.w00.at(0, 2);
      rec.tau0 = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * (t0 - E) +
                 (h1 + h2) / (h1 * h2) * (t1 - E) - h1 / (h2 * (h1 + h2)) * (t2 - E);
      double flat = 0.0;
      for (int i = 1; i < g.nr(); ++i) {
        const double r = g.r_nodes[i];
        if (r > 1.0 + 1e-14) break;
        const Complex tau_r = (wn.w00.at(0, i) - E) / r;
        flat = std::max(flat, std::abs(tau_r - rec.tau0));
      }
      rec.tau_flatness = flat;
    }

    out.trace.push_back(rec);
    e_prev = sr.e_n;

    if (n == cfg.n_steps) {
      out.e = sr.e_n;
      out.tau = rec.tau0;
      out.E_seq = ev.E_seq;
      out.chains = ev.chains;
      out.budget = ev.dropped;
    }
  }
  return out;
}

ConsistencyReport consistency_E0inf(const FlowResult& flow, const RGConfig& cfg) {
  const int n = static_cast<int>(flow.E_seq.size()) - 1;
  Complex sum(0.0, 0.0);
  double rho_pow = 1.0;
  for (int i = 1; i <= n; ++i) {
    rho_pow *= cfg.rho;
    sum += rho_pow * (flow.E_seq[i] - flow.E_seq[i - 1] / cfg.rho);
  }
  ConsistencyReport rep;
  rep.residual = std::abs(flow.e - sum);
  const double alpha_last = flow.trace.empty() ? 0.0 : flow.trace.back().alpha_meas;
  rep.tail = alpha_last * std::pow(cfg.rho, n + 1) / (1.0 - cfg.rho);
  return rep;
}

double cone_distance(Complex z) {
  const double x = z.real();
  const double y = std::abs(z.imag());
  if (x >= 0.0 && y <= x / 3.0) return 0.0;
  // Boundary ray through (3, 1)/sqrt(10); the apex covers the rest.
  const double t = (3.0 * x + y) / 10.0;
  if (t <= 0.0) return std::abs(z);
  const double dx = x - 3.0 * t, dy = y - t;
  return std::sqrt(dx * dx + dy * dy);
}

std::vector<bool> cone_check(const std::vector<Complex>& eigs, Complex e, double tol) {
  std::vector<bool> out;
  out.reserve(eigs.size());
  for (const Complex& z : eigs) out.push_back(cone_distance(z - e) <= tol);
  return out;
}

}  // namespace srg
