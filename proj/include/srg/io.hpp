#pragma once

#include <iosfwd>
#include <string>

#include "srg/kernel.hpp"
#include "srg/rgflow.hpp"

namespace srg {

// Structured-text chain document: a header carrying the order cap, the grid
// nodes and the norm parameters, then one flattened complex array per stored
// (m, n), row-major with r outer and the k slots inner, >= 15 significant
// digits.
void write_chain_text(std::ostream& os, const KernelChain& chain, const BanachParams& p,
                      int m_max);
void write_chain_text(const std::string& path, const KernelChain& chain, const BanachParams& p,
                      int m_max);

struct ChainDocument {
  KernelChain chain;
  BanachParams params;
  int m_max;
};
ChainDocument read_chain_text(std::istream& is);
ChainDocument read_chain_text(const std::string& path);

// Binary matrix container: uint64 rows, uint64 cols, then row-major complex
// doubles (little-endian IEEE pairs).
void write_matrix_bin(const std::string& path, const ComplexMatrix& M);
ComplexMatrix read_matrix_bin(const std::string& path);

void write_vector_bin(const std::string& path, const ComplexVector& v);

// Eigenvalue list as CSV with columns re,im.
void write_eigs_csv(const std::string& path, const std::vector<Complex>& eigs);

// Flow trace CSV; the comment header records the resolved configuration and
// the seed so identical configs reproduce the file byte for byte.
void write_flowtrace_csv(const std::string& path, const FlowResult& flow, const RGConfig& cfg,
                         uint64_t seed);

void write_residuals_csv(const std::string& path, const std::vector<double>& residuals,
                         const std::vector<double>& gamma_meas);

// Key/value echo of the configuration actually used by a run.
std::string config_echo(const RGConfig& cfg, const std::string& model_desc, uint64_t seed);

}  // namespace srg
