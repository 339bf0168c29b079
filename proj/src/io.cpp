#include "srg/io.hpp"

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace srg {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::runtime_error("chain document: " + what);
}

}  // namespace

void write_chain_text(std::ostream& os, const KernelChain& chain, const BanachParams& p,
                      int m_max) {
  const auto& g = chain.grid();
  os << "srg-chain 1\n";
  os << std::setprecision(17);
  os << "mu " << p.mu << "\n";
  os << "s " << p.s << "\n";
  os << "xi " << p.xi << "\n";
  os << "m_max " << m_max << "\n";
  os << "r_nodes " << g.nr();
  for (double r : g.r_nodes) os << " " << r;
  os << "\n";
  os << "k_nodes " << g.nk();
  for (double k : g.k_nodes) os << " " << k;
  os << "\n";

  auto dump = [&](const Kernel& k) {
    os << "kernel " << k.m() << " " << k.n() << "\n";
    // r outer, k slots inner
    for (int ir = 0; ir < g.nr(); ++ir) {
      for (int flat = 0; flat < k.tuple_count(); ++flat) {
        const Complex v = k.at(flat, ir);
        os << v.real() << " " << v.imag();
        os << (flat + 1 == k.tuple_count() ? "\n" : " ");
      }
    }
  };
  dump(chain.w00);
  for (const Kernel& k : chain.higher) dump(k);
  os << "end\n";
}

void write_chain_text(const std::string& path, const KernelChain& chain, const BanachParams& p,
                      int m_max) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_chain_text(os, chain, p, m_max);
}

ChainDocument read_chain_text(std::istream& is) {
  std::string tok;
  int version;
  is >> tok >> version;
  require(is.good() && tok == "srg-chain" && version == 1, "bad magic");

  BanachParams p;
  int m_max = 0;
  std::vector<double> r_nodes, k_nodes;
  is >> tok >> p.mu;
  require(tok == "mu", "expected mu");
  is >> tok >> p.s;
  require(tok == "s", "expected s");
  is >> tok >> p.xi;
  require(tok == "xi", "expected xi");
  is >> tok >> m_max;
  require(tok == "m_max", "expected m_max");
  int n;
  is >> tok >> n;
  require(tok == "r_nodes", "expected r_nodes");
  r_nodes.resize(n);
  for (double& v : r_nodes) is >> v;
  is >> tok >> n;
  require(tok == "k_nodes", "expected k_nodes");
  k_nodes.resize(n);
  for (double& v : k_nodes) is >> v;
  require(is.good(), "truncated header");

  auto grid = std::make_shared<RadialGrid>(std::move(r_nodes), std::move(k_nodes));
  std::vector<Kernel> kernels;
  while (is >> tok) {
    if (tok == "end") break;
    require(tok == "kernel", "expected kernel block");
    int m, nn;
    is >> m >> nn;
    Kernel k(m, nn, grid);
    for (int ir = 0; ir < grid->nr(); ++ir)
      for (int flat = 0; flat < k.tuple_count(); ++flat) {
        double re, im;
        is >> re >> im;
        k.at(flat, ir) = Complex(re, im);
      }
    require(is.good(), "truncated kernel array");
    kernels.push_back(std::move(k));
  }
  require(!kernels.empty() && kernels.front().order() == 0, "missing w00 block");

  ChainDocument doc{KernelChain(std::move(kernels.front())), p, m_max};
  for (size_t i = 1; i < kernels.size(); ++i) doc.chain.set(std::move(kernels[i]));
  return doc;
}

ChainDocument read_chain_text(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_chain_text(is);
}

void write_matrix_bin(const std::string& path, const ComplexMatrix& M) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  const uint64_t rows = M.rows(), cols = M.cols();
  os.write(reinterpret_cast<const char*>(&rows), 8);
  os.write(reinterpret_cast<const char*>(&cols), 8);
  for (uint64_t i = 0; i < rows; ++i)
    for (uint64_t j = 0; j < cols; ++j) {
      const double re = M(i, j).real(), im = M(i, j).imag();
      os.write(reinterpret_cast<const char*>(&re), 8);
      os.write(reinterpret_cast<const char*>(&im), 8);
    }
}

ComplexMatrix read_matrix_bin(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  uint64_t rows, cols;
  is.read(reinterpret_cast<char*>(&rows), 8);
  is.read(reinterpret_cast<char*>(&cols), 8);
  ComplexMatrix M(rows, cols);
  for (uint64_t i = 0; i < rows; ++i)
    for (uint64_t j = 0; j < cols; ++j) {
      double re, im;
      is.read(reinterpret_cast<char*>(&re), 8);
      is.read(reinterpret_cast<char*>(&im), 8);
      M(i, j) = Complex(re, im);
    }
  if (!is) throw std::runtime_error("truncated matrix file " + path);
  return M;
}

void write_vector_bin(const std::string& path, const ComplexVector& v) {
  ComplexMatrix M(v.size(), 1);
  M.col(0) = v;
  write_matrix_bin(path, M);
}

void write_eigs_csv(const std::string& path, const std::vector<Complex>& eigs) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << std::setprecision(17);
  os << "re,im\n";
  for (const Complex& e : eigs) os << e.real() << "," << e.imag() << "\n";
}

void write_flowtrace_csv(const std::string& path, const FlowResult& flow, const RGConfig& cfg,
                         uint64_t seed) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << std::setprecision(17);
  os << "# " << config_echo(cfg, "", seed) << "\n";
  os << "n,re_En,im_En,re_en,im_en,absE,supTprime,norm_w1,dropped,tau0_re,tau0_im,"
        "tau_flatness\n";
  for (const StepRecord& r : flow.trace) {
    os << r.n << "," << r.E_n.real() << "," << r.E_n.imag() << "," << r.e_n.real() << ","
       << r.e_n.imag() << "," << r.abs_E << "," << r.sup_tprime << "," << r.w1_norm << ","
       << r.dropped << "," << r.tau0.real() << "," << r.tau0.imag() << "," << r.tau_flatness
       << "\n";
  }
}

void write_residuals_csv(const std::string& path, const std::vector<double>& residuals,
                         const std::vector<double>& gamma_meas) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << std::setprecision(17);
  os << "k,residual,bound_2gamma\n";
  for (size_t k = 0; k < residuals.size(); ++k) {
    const double g = k < gamma_meas.size() ? 2.0 * gamma_meas[k] : 0.0;
    os << k << "," << residuals[k] << "," << g << "\n";
  }
}

std::string config_echo(const RGConfig& cfg, const std::string& model_desc, uint64_t seed) {
  std::ostringstream os;
  os << std::setprecision(17);
  if (!model_desc.empty()) os << "model=" << model_desc << " ";
  os << "rho=" << cfg.rho << " mu=" << cfg.mu << " s=" << cfg.s << " xi=" << cfg.xi()
     << " M_max=" << cfg.M_max << " L_max=" << cfg.L_max << " n_steps=" << cfg.n_steps
     << " fp_tol=" << cfg.fp_tol << " n_r=" << cfg.n_r << " r_max=" << cfg.r_max
     << " G=" << cfg.G << " n_max=" << cfg.n_max << " seed=" << seed;
  return os.str();
}

}  // namespace srg
