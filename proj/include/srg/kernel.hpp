#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "srg/grid.hpp"

namespace srg {

using Complex = std::complex<double>;

// One coupling function w_{m,n}, tabulated on the grid.  For m+n >= 1 the
// values are indexed by (k-slot tuple, r node) with the r axis contiguous;
// the k tuple is an ordered multi-index over grid.k_nodes, row-major.  For
// m = n = 0 there is a single r row.
class Kernel {
 public:
  Kernel(int m, int n, GridPtr grid);

  static Kernel constant(int m, int n, GridPtr grid, Complex value);
  static Kernel from_function(
      int m, int n, GridPtr grid,
      const std::function<Complex(double r, const std::vector<double>& moduli)>& f);

  int m() const { return m_; }
  int n() const { return n_; }
  int order() const { return m_ + n_; }
  const RadialGrid& grid() const { return *grid_; }
  GridPtr grid_ptr() const { return grid_; }

  int slots() const { return m_ + n_; }
  int tuple_count() const { return tuples_; }

  Complex& at(int flat_k, int ir) { return values_[static_cast<size_t>(flat_k) * nr_ + ir]; }
  Complex at(int flat_k, int ir) const { return values_[static_cast<size_t>(flat_k) * nr_ + ir]; }

  // Contiguous r row for a fixed k tuple.
  const Complex* r_row(int flat_k) const { return values_.data() + static_cast<size_t>(flat_k) * nr_; }

  std::vector<Complex>& values() { return values_; }
  const std::vector<Complex>& values() const { return values_; }

  int flat_index(const std::vector<int>& k_idx) const;

  // Multilinear interpolation; moduli clamp to the k-node range, r continues
  // the last segment linearly past R_max.
  Complex eval(double r, const std::vector<double>& moduli) const;

  // Value at a k-node tuple with only r off the lattice.
  Complex eval_r(double r, int flat_k) const {
    const auto& rn = grid_->r_nodes;
    const Complex* row = values_.data() + static_cast<size_t>(flat_k) * nr_;
    if (grid_->r_uniform) {
      int i = static_cast<int>((r - rn[0]) * grid_->r_step_inv);
      i = i < 0 ? 0 : (i > nr_ - 2 ? nr_ - 2 : i);
      const double t = (r - rn[i]) * grid_->r_step_inv;
      return (1.0 - t) * row[i] + t * row[i + 1];
    }
    return eval_r_general(r, row);
  }

  // Interpolation with sub-grid momenta dropped: any modulus below the
  // smallest k node yields 0.  This is the evaluation the scaling map uses;
  // content pushed below the resolved shells leaves the truncation, exactly
  // as the mode-shift dilation loses it at matrix level.
  Complex eval_drop_subgrid(double r, const std::vector<double>& moduli) const;

  bool same_shape(const Kernel& other) const;

  double max_abs() const;

 private:
  Complex eval_r_general(double r, const Complex* row) const;

  int m_, n_;
  GridPtr grid_;
  int nr_, nk_, tuples_;
  std::vector<Complex> values_;
};

// The sequence (w00, (w_{m,n})_{m+n>=1}); at most one kernel per (m, n),
// all on a shared grid.
struct KernelChain {
  Kernel w00;
  std::vector<Kernel> higher;

  explicit KernelChain(Kernel w00_) : w00(std::move(w00_)) {}

  const RadialGrid& grid() const { return w00.grid(); }
  GridPtr grid_ptr() const { return w00.grid_ptr(); }

  const Kernel* find(int m, int n) const;
  void set(Kernel k);

  // Adds delta * identity, i.e. shifts w00 by a constant.
  void add_constant(Complex delta);

  // w00 at r = 0 (the grid starts at 0, so this is exact).
  Complex vacuum_part() const { return w00.at(0, 0); }
};

// --- norms -----------------------------------------------------------------

// ||w_{m,n}||_{mu,s}: sum over derivative orders n' <= s of the weighted sup
//   max_j sup_{r,k} |k_j|^{-mu} |d_r^{n'} w|,
// with the sup taken over grid nodes, r restricted to [0, 1] for m+n >= 1.
// For w00: |w(0)| + sum_{1<=n'<=s} sup_r |d_r^{n'} w| over the whole r grid.
// Derivatives use second-order central differences, one-sided at the ends.
double norm_mu_s(const Kernel& k, const BanachParams& p);

// sum_{m+n>=1} xi^{-(m+n)} ||w_{m,n}||_{mu,s} (the w00 part is reported via
// split_etw / polydisc_membership).
double chain_norm(const KernelChain& chain, const BanachParams& p);

// --- structure -------------------------------------------------------------

// Average over permutations within the first m and last n momentum slots.
Kernel symmetrize(const Kernel& k);

bool is_symmetric(const Kernel& k, double tol = 1e-12);

// s_rho: w_{m,n}[r, k] -> rho^{m+n-1} w_{m,n}[rho r, rho k], resampled on the
// same grid (w00 -> rho^{-1} w00[rho r]).  Momenta leaving the resolved
// shells are dropped (see Kernel::eval_drop_subgrid).
KernelChain scale_chain(const KernelChain& chain, double rho);

struct SplitETW {
  Complex E;
  Kernel T;                    // w00 - E, vanishes at r = 0
  std::vector<Kernel> w1;
};
SplitETW split_etw(const KernelChain& chain);

// sup_r |T'(r) - 1| over the r grid (T = w00 - w00(0)).
double sup_tprime_minus_one(const KernelChain& chain);

struct PolydiscReport {
  double abs_E;
  double sup_tprime_minus_one;
  double w1_norm;
  bool ok_E;
  bool ok_T;
  bool ok_W;
  bool ok() const { return ok_E && ok_T && ok_W; }
};
PolydiscReport polydisc_membership(const KernelChain& chain, double alpha, double beta,
                                   double gamma, const BanachParams& p);

// Self-adjointness symmetry w_{m,n}(r; k, kt) = conj(w_{n,m}(r; kt, k)),
// with w00 real.
bool chain_is_selfadjoint(const KernelChain& chain, double tol = 1e-12);

// Max |difference| over all stored entries; kernels present in one chain and
// missing in the other compare against zero.
double chain_max_difference(const KernelChain& a, const KernelChain& b);

}  // namespace srg
