// Batch front door: model generation, flows, eigenvector certificates,
// spectra and oracle comparisons, driven by a JSON config plus flag
// overrides.  Exit status is nonzero whenever a requested check fails.

#include <complex>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "srg/checks.hpp"
#include "srg/io.hpp"

using namespace srg;
using nlohmann::json;

namespace {

struct RunConfig {
  std::string model = "toy";
  std::string model_file;
  Complex g{0.005, 0.0};
  double model_mu = 0.5;
  RGConfig rg;
  std::string out_dir = "out";
  uint64_t seed = 12345;
  int check_samples = 1000;
  bool dump_matrices = false;

  RunConfig() {
    rg.xi_override = 0.25;
    rg.prune_tol = 1e-14;
  }
};

void apply_json(RunConfig& rc, const json& j) {
  if (j.contains("model")) {
    const auto& m = j["model"];
    rc.model = m.value("type", rc.model);
    if (m.contains("g")) {
      const auto& g = m["g"];
      rc.g = g.is_array() ? Complex(g[0].get<double>(), g.size() > 1 ? g[1].get<double>() : 0.0)
                          : Complex(g.get<double>(), 0.0);
    }
    rc.model_mu = m.value("mu", rc.model_mu);
    rc.model_file = m.value("path", rc.model_file);
  }
  if (j.contains("rg")) {
    const auto& r = j["rg"];
    rc.rg.rho = r.value("rho", rc.rg.rho);
    rc.rg.mu = r.value("mu", rc.rg.mu);
    rc.rg.s = r.value("s", rc.rg.s);
    if (r.contains("xi")) rc.rg.xi_override = r["xi"].get<double>();
    rc.rg.M_max = r.value("M_max", rc.rg.M_max);
    rc.rg.L_max = r.value("L_max", rc.rg.L_max);
    rc.rg.n_steps = r.value("n_steps", rc.rg.n_steps);
    rc.rg.fp_tol = r.value("fp_tol", rc.rg.fp_tol);
    rc.rg.prune_tol = r.value("prune_tol", rc.rg.prune_tol);
    rc.rg.n_r = r.value("n_r", rc.rg.n_r);
    rc.rg.r_max = r.value("r_max", rc.rg.r_max);
    rc.rg.rank_tol = r.value("rank_tol", rc.rg.rank_tol);
  }
  if (j.contains("fock")) {
    rc.rg.G = j["fock"].value("G", rc.rg.G);
    rc.rg.n_max = j["fock"].value("n_max", rc.rg.n_max);
    rc.rg.dim_cap = j["fock"].value("dim_cap", rc.rg.dim_cap);
  }
  if (j.contains("outputs")) {
    rc.out_dir = j["outputs"].value("dir", rc.out_dir);
  }
  rc.seed = j.value("seed", rc.seed);
}

json resolved_json(const RunConfig& rc) {
  json j;
  j["model"] = {{"type", rc.model}, {"g", {rc.g.real(), rc.g.imag()}}, {"mu", rc.model_mu}};
  if (!rc.model_file.empty()) j["model"]["path"] = rc.model_file;
  j["rg"] = {{"rho", rc.rg.rho},       {"mu", rc.rg.mu},
             {"s", rc.rg.s},           {"xi", rc.rg.xi()},
             {"M_max", rc.rg.M_max},   {"L_max", rc.rg.L_max},
             {"n_steps", rc.rg.n_steps}, {"fp_tol", rc.rg.fp_tol},
             {"prune_tol", rc.rg.prune_tol}, {"n_r", rc.rg.n_r},
             {"r_max", rc.rg.r_max},   {"rank_tol", rc.rg.rank_tol}};
  j["fock"] = {{"G", rc.rg.G}, {"n_max", rc.rg.n_max}, {"dim_cap", rc.rg.dim_cap}};
  j["outputs"] = {{"dir", rc.out_dir}};
  j["seed"] = rc.seed;
  return j;
}

struct Setup {
  ModeSet modes;
  GridPtr grid;
  KernelChain chain;
};

Setup build_model(const RunConfig& rc) {
  ModeSet modes = build_mode_set(rc.rg.G, rc.rg.rho, 1.0);
  GridPtr grid = RadialGrid::make(rc.rg.n_r, rc.rg.r_max, modes);
  if (rc.model == "hf") return Setup{std::move(modes), grid, make_hf_chain(grid)};
  if (rc.model == "toy") {
    if (std::abs(rc.g) >= rc.rg.rho / 8.0)
      std::cerr << "warning: |g| = " << std::abs(rc.g) << " is at or above rho/8 = "
                << rc.rg.rho / 8.0 << "; the flow may leave its domain\n";
    return Setup{std::move(modes), grid, generate_toy_model(rc.g, rc.model_mu, grid)};
  }
  if (rc.model == "file") {
    ChainDocument doc = read_chain_text(rc.model_file);
    GridPtr g = doc.chain.grid_ptr();
    return Setup{std::move(modes), g, std::move(doc.chain)};
  }
  throw std::runtime_error("unknown model type: " + rc.model);
}

void write_resolved(const RunConfig& rc) {
  std::filesystem::create_directories(rc.out_dir);
  std::ofstream os(rc.out_dir + "/resolved_config.json");
  os << std::setw(2) << resolved_json(rc) << "\n";
}

int cmd_check(const RunConfig& rc) {
  write_resolved(rc);
  const auto results = run_all_checks(rc.seed, rc.check_samples);
  bool all = true;
  for (const auto& r : results) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    all = all && r.pass;
  }
  if (!all) {
    for (const auto& r : results)
      if (!r.pass) std::cerr << "failing invariant: " << r.name << "\n";
    return 1;
  }
  return 0;
}

int cmd_flow(const RunConfig& rc) {
  write_resolved(rc);
  const Setup s = build_model(rc);
  const FlowResult flow = run_flow(s.chain, s.modes, rc.rg);
  write_flowtrace_csv(rc.out_dir + "/flow_trace.csv", flow, rc.rg, rc.seed);
  write_chain_text(rc.out_dir + "/final_chain.txt", flow.chains.back(), rc.rg.banach(),
                   rc.rg.M_max);
  std::cout << std::setprecision(12);
  std::cout << "e = " << flow.e.real() << (flow.e.imag() < 0 ? " - " : " + ")
            << std::abs(flow.e.imag()) << "i\n";
  std::cout << "tau = " << flow.tau.real() << (flow.tau.imag() < 0 ? " - " : " + ")
            << std::abs(flow.tau.imag()) << "i\n";
  std::cout << "ground-state energy (H_u + e) = " << (flow.H_u + flow.e).real() << "\n";
  std::cout << "truncation budget = " << flow.budget << "\n";
  const ConsistencyReport cons = consistency_E0inf(flow, rc.rg);
  std::cout << "consistency residual = " << cons.residual << " (tail " << cons.tail << ")\n";
  return cons.ok() ? 0 : 1;
}

int cmd_eig(const RunConfig& rc) {
  write_resolved(rc);
  const Setup s = build_model(rc);
  const EigenvectorResult res =
      eigenvector_sequence(s.chain, s.modes, rc.rg, std::min(rc.rg.n_steps, 5));
  write_residuals_csv(rc.out_dir + "/residuals.csv", res.residuals, res.gamma_meas);
  write_vector_bin(rc.out_dir + "/psi.bin", res.psi_normalized);
  std::cout << std::setprecision(12);
  std::cout << "E = " << res.E.real() << "\n";
  bool ok = !res.collapse_warning;
  for (size_t k = 0; k < res.residuals.size(); ++k) {
    const double bound = 2.0 * res.gamma_meas[k];
    const bool pass = res.residuals[k] <= bound * (1.0 + 1e-9);
    std::cout << "k=" << k << " residual=" << res.residuals[k] << " bound=" << bound
              << (pass ? "" : "  VIOLATION") << "\n";
    ok = ok && pass;
  }
  if (res.collapse_warning) std::cerr << "warning: eigenvector norm fell below 1/2\n";
  return ok ? 0 : 1;
}

int cmd_spectrum(const RunConfig& rc) {
  write_resolved(rc);
  const Setup s = build_model(rc);
  const FlowResult flow = run_flow(s.chain, s.modes, rc.rg);
  const TruncatedFock fock(s.modes, rc.rg.n_max);
  const ComplexMatrix H = assemble_hamiltonian(s.chain, fock);
  if (rc.dump_matrices) write_matrix_bin(rc.out_dir + "/hamiltonian.bin", H);
  const SpectrumResult sp = dense_spectrum(H, false, rc.rg.dim_cap);
  write_eigs_csv(rc.out_dir + "/eigenvalues.csv", sp.eigenvalues);

  const Complex e_full = flow.H_u + flow.e;
  const double tol = std::max(1e-4, flow.budget);
  const auto inside = cone_check(sp.eigenvalues, e_full, tol);
  int outside = 0;
  for (bool b : inside) outside += b ? 0 : 1;
  std::cout << std::setprecision(12);
  std::cout << "e = " << e_full.real() << " + " << e_full.imag() << "i, tolerance " << tol
            << "\n";
  std::cout << "eigenvalues outside the shifted cone: " << outside << " of "
            << sp.eigenvalues.size() << "\n";
  return outside == 0 ? 0 : 1;
}

int cmd_oracle(const RunConfig& rc) {
  write_resolved(rc);
  const Setup s = build_model(rc);
  const FlowResult flow = run_flow(s.chain, s.modes, rc.rg);
  const TruncatedFock fock(s.modes, rc.rg.n_max);
  const ComplexMatrix H = assemble_hamiltonian(s.chain, fock);
  if (rc.dump_matrices) write_matrix_bin(rc.out_dir + "/hamiltonian.bin", H);
  const SpectrumResult sp = dense_spectrum(H, false, rc.rg.dim_cap);
  const Complex e_flow = flow.H_u + flow.e;
  const Complex e_dense = sp.eigenvalues.front();
  const double diff = std::abs(e_flow - e_dense);
  const double tol = std::max(1e-4, flow.budget);
  std::cout << std::setprecision(12);
  std::cout << "e_flow  = " << e_flow.real() << " + " << e_flow.imag() << "i\n";
  std::cout << "e_dense = " << e_dense.real() << " + " << e_dense.imag() << "i\n";
  std::cout << "|e_flow - e_dense| = " << diff << " (tolerance " << tol << ")\n";
  return diff <= tol ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral renormalization engine"};
  app.require_subcommand(1);

  RunConfig rc;
  std::string config_path;
  std::string g_str;
  std::optional<double> rho_opt, mu_opt, xi_opt;
  std::optional<int> steps_opt, gmax_opt, nmax_opt;

  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--out", rc.out_dir, "output directory");
  app.add_option("--seed", rc.seed, "seed for randomized suites");
  app.add_option("--steps", steps_opt, "number of flow steps");
  app.add_option("--g", g_str, "coupling RE[,IM]");
  app.add_option("--rho", rho_opt, "photon energy scale");
  app.add_option("--mu", mu_opt, "infrared weight exponent");
  app.add_option("--xi", xi_opt, "chain-norm order weight");
  app.add_option("--gmax", gmax_opt, "number of momentum shells");
  app.add_option("--nmax", nmax_opt, "boson-number cap");
  app.add_option("--model", rc.model, "model: hf | toy | file");
  app.add_option("--model-file", rc.model_file, "chain document for model=file");
  app.add_option("--samples", rc.check_samples, "random instances per check suite");
  app.add_flag("--dump-matrices", rc.dump_matrices, "write assembled matrices");

  app.add_subcommand("check", "run the invariant suites")->fallthrough();
  app.add_subcommand("flow", "run the renormalization flow")->fallthrough();
  app.add_subcommand("eig", "build the constructive eigenvector")->fallthrough();
  app.add_subcommand("spectrum", "dense spectrum and cone membership")->fallthrough();
  app.add_subcommand("oracle", "flow energy against dense diagonalization")->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw std::runtime_error("cannot open config " + config_path);
      json j;
      is >> j;
      apply_json(rc, j);
    }
    if (steps_opt) rc.rg.n_steps = *steps_opt;
    if (rho_opt) rc.rg.rho = *rho_opt;
    if (mu_opt) {
      rc.rg.mu = *mu_opt;
      rc.model_mu = *mu_opt;
    }
    if (xi_opt) rc.rg.xi_override = *xi_opt;
    if (gmax_opt) rc.rg.G = *gmax_opt;
    if (nmax_opt) rc.rg.n_max = *nmax_opt;
    if (!g_str.empty()) {
      const auto comma = g_str.find(',');
      rc.g = comma == std::string::npos
                 ? Complex(std::stod(g_str), 0.0)
                 : Complex(std::stod(g_str.substr(0, comma)), std::stod(g_str.substr(comma + 1)));
    }
    rc.rg.validate();

    if (app.got_subcommand("check")) return cmd_check(rc);
    if (app.got_subcommand("flow")) return cmd_flow(rc);
    if (app.got_subcommand("eig")) return cmd_eig(rc);
    if (app.got_subcommand("spectrum")) return cmd_spectrum(rc);
    if (app.got_subcommand("oracle")) return cmd_oracle(rc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
