#pragma once

#include <optional>
#include <string>

#include "srg/wick.hpp"

namespace srg {

// Parameters of the iteration.  xi defaults to the closed-form value
// sqrt(rho) / (4 C_chi) and may be overridden (the bundled model configs use
// a working xi; the closed-form one makes desk-scale couplings fail the
// polydisc gate by a wide margin while the bounds it certifies stay loose).
struct RGConfig {
  double rho = 0.4;
  double mu = 0.5;
  int s = 1;
  std::optional<double> xi_override;
  int M_max = 2;
  int L_max = 3;
  int n_steps = 6;
  double fp_tol = 1e-12;
  int fp_max_iter = 200;
  double rank_tol = 1e-8;
  double prune_tol = 0.0;
  int n_r = 33;
  double r_max = 2.0;
  int G = 16;
  int n_max = 3;
  int dim_cap = 4096;

  double xi() const;
  BanachParams banach() const { return BanachParams{mu, s, xi()}; }
  RenormOptions renorm_options(bool with_estimates) const;
  void validate() const;
};

struct FlowError : std::runtime_error {
  int step;
  FlowError(int step_, const std::string& what) : std::runtime_error(what), step(step_) {}
};

struct StepRecord {
  int n;
  Complex E_n;            // constant part of the working chain
  Complex e_n;
  double abs_E;
  double sup_tprime;      // sup |T'_n - 1|
  double w1_norm;         // gamma_n, measured
  double dropped;         // truncation mass discarded at this step
  Complex tau0;           // T_n'(0)
  double tau_flatness;    // sup_{0<r<=1} |T_n(r)/r - tau0|
  double alpha_meas;      // |Delta_n E| at the solve's starting point
  int picard_iters;
};

// One application of the renormalization map, with the polydisc measurements
// of the output chain.
struct StepResult {
  KernelChain chain;
  RenormReport report;
  PolydiscReport polydisc;
};
StepResult renorm_step(const KernelChain& chain, const ModeSet& modes, const RGConfig& cfg,
                       bool with_estimates = false);

// E_n(lambda): the vacuum part after n renormalization steps of
// chain_s - lambda, together with the intermediate constants E_j.
struct EnEvalResult {
  Complex value;
  std::vector<Complex> E_seq;          // E_j(lambda), j = 0..n
  std::vector<KernelChain> chains;     // kept only on request
  double dropped = 0.0;                // sum of rho^j-weighted step estimates
};
EnEvalResult En_eval(const KernelChain& chain_s, Complex lambda, int n, const ModeSet& modes,
                     const RGConfig& cfg, bool keep_chains = false, bool with_estimates = false);

// Picard iteration lambda <- lambda + rho^n E_n(lambda) started at e_prev.
struct SolveEnResult {
  Complex e_n;
  double alpha_meas;
  int iterations;
};
SolveEnResult solve_en(const KernelChain& chain_s, int n, Complex e_prev, const ModeSet& modes,
                       const RGConfig& cfg);

struct FlowResult {
  std::vector<StepRecord> trace;
  Complex e;                         // final e_n
  Complex tau;                       // tau_n(0) of the last step
  Complex H_u;
  std::vector<Complex> E_seq;        // E_j(e), j = 0..n_steps
  std::vector<KernelChain> chains;   // R^j(chain - (H_u + e)), j = 1..n_steps
  double budget = 0.0;               // accumulated truncation budget
};
FlowResult run_flow(const KernelChain& chain, const ModeSet& modes, const RGConfig& cfg);

// Residual of e = sum_i rho^i Delta_i E(e) against the measured tail.
struct ConsistencyReport {
  double residual;
  double tail;
  bool ok() const { return residual <= tail; }
};
ConsistencyReport consistency_E0inf(const FlowResult& flow, const RGConfig& cfg);

// Distance to the sector {Re w >= 0, |Im w| <= Re w / 3}.
double cone_distance(Complex z);

// Membership of every eigenvalue in e + S, inflated by tol.
std::vector<bool> cone_check(const std::vector<Complex>& eigs, Complex e, double tol);

}  // namespace srg
