#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "srg/checks.hpp"
#include "srg/io.hpp"

using namespace srg;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("chain text document round trip") {
  std::mt19937_64 rng(41);
  const ModeSet ms = build_mode_set(6, 0.4, 1.0);
  const GridPtr gr = RadialGrid::make(9, 2.0, ms);
  KernelChain chain = random_chain(gr, rng, 2, 0.5, 0.05, false);
  chain.add_constant(Complex(0.01, -0.002));
  const BanachParams p{0.5, 1, 0.25};

  std::stringstream ss;
  write_chain_text(ss, chain, p, 2);
  const ChainDocument doc = read_chain_text(ss);

  CHECK(doc.params.mu == p.mu);
  CHECK(doc.params.s == p.s);
  CHECK(doc.params.xi == p.xi);
  CHECK(doc.m_max == 2);
  CHECK(doc.chain.higher.size() == chain.higher.size());
  CHECK(chain_max_difference(doc.chain, chain) < 1e-14);
  // the writer keeps >= 15 significant digits, so norms survive exactly
  CHECK(chain_norm(doc.chain, p) == doctest::Approx(chain_norm(chain, p)).epsilon(1e-14));
}

TEST_CASE("matrix binary container round trip") {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexMatrix M(7, 5);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 5; ++j) M(i, j) = Complex(g(rng), g(rng));
  const std::string path = tmp_path("srg_test_matrix.bin");
  write_matrix_bin(path, M);
  const ComplexMatrix R = read_matrix_bin(path);
  CHECK(R.rows() == 7);
  CHECK(R.cols() == 5);
  CHECK((R - M).cwiseAbs().maxCoeff() == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("eigenvalue and trace CSV files") {
  const std::string path = tmp_path("srg_test_eigs.csv");
  write_eigs_csv(path, {Complex(1.0, -2.0), Complex(0.25, 0.0)});
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  CHECK(line == "re,im");
  std::getline(is, line);
  CHECK(line == "1,-2");
  std::remove(path.c_str());
}

TEST_CASE("flow trace CSV is deterministic for a fixed config") {
  RGConfig cfg;
  cfg.rho = 0.4;
  cfg.xi_override = 0.25;
  cfg.G = 6;
  cfg.n_r = 17;
  cfg.n_max = 2;
  cfg.n_steps = 2;
  const ModeSet ms = build_mode_set(cfg.G, cfg.rho, 1.0);
  const GridPtr gr = RadialGrid::make(cfg.n_r, cfg.r_max, ms);
  const KernelChain toy = generate_toy_model(Complex(0.005, 0.0), 0.5, gr);

  auto run_to_string = [&]() {
    const FlowResult flow = run_flow(toy, ms, cfg);
    const std::string path = tmp_path("srg_test_trace.csv");
    write_flowtrace_csv(path, flow, cfg, 12345);
    std::ifstream is(path);
    std::stringstream ss;
    ss << is.rdbuf();
    std::remove(path.c_str());
    return ss.str();
  };
  const std::string a = run_to_string();
  const std::string b = run_to_string();
  CHECK(a == b);
  CHECK(a.find("seed=12345") != std::string::npos);
  CHECK(a.find("n,re_En,im_En,re_en,im_en,absE,supTprime,norm_w1,dropped,tau0_re,tau0_im,"
               "tau_flatness") != std::string::npos);
}

TEST_CASE("invariant suites pass at smoke size") {
  const auto results = run_all_checks(2024, 60);
  for (const auto& r : results) {
    INFO(r.name, ": ", r.detail);
    CHECK(r.pass);
  }
}
