#include "srg/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace srg {

namespace {

int ipow(int base, int exp) {
  int r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

// Derivative of the sampled row by second-order finite differences on a
// possibly non-uniform grid; one-sided at the boundaries.
std::vector<Complex> fd_derivative(const std::vector<double>& x, const Complex* f, int n) {
  std::vector<Complex> d(n);
  for (int i = 0; i < n; ++i) {
    if (i == 0) {
      const double h1 = x[1] - x[0], h2 = x[2] - x[1];
      d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] -
             h1 / (h2 * (h1 + h2)) * f[2];
    } else if (i == n - 1) {
      const double h1 = x[n - 2] - x[n - 3], h2 = x[n - 1] - x[n - 2];
      d[i] = h2 / (h1 * (h1 + h2)) * f[n - 3] - (h1 + h2) / (h1 * h2) * f[n - 2] +
             (h1 + 2.0 * h2) / (h2 * (h1 + h2)) * f[n - 1];
    } else {
      const double h1 = x[i] - x[i - 1], h2 = x[i + 1] - x[i];
      d[i] = -h2 / (h1 * (h1 + h2)) * f[i - 1] + (h2 - h1) / (h1 * h2) * f[i] +
             h1 / (h2 * (h1 + h2)) * f[i + 1];
    }
  }
  return d;
}

}  // namespace

Kernel::Kernel(int m, int n, GridPtr grid) : m_(m), n_(n), grid_(std::move(grid)) {
  if (m_ < 0 || n_ < 0) throw std::domain_error("Kernel: negative order");
  if (!grid_) throw std::domain_error("Kernel: null grid");
  nr_ = grid_->nr();
  nk_ = grid_->nk();
  tuples_ = (m_ + n_ == 0) ? 1 : ipow(nk_, m_ + n_);
  values_.assign(static_cast<size_t>(tuples_) * nr_, Complex(0.0, 0.0));
}

Kernel Kernel::constant(int m, int n, GridPtr grid, Complex value) {
  Kernel k(m, n, std::move(grid));
  std::fill(k.values_.begin(), k.values_.end(), value);
  return k;
}

Kernel Kernel::from_function(
    int m, int n, GridPtr grid,
    const std::function<Complex(double, const std::vector<double>&)>& f) {
  Kernel k(m, n, std::move(grid));
  const auto& g = k.grid();
  std::vector<int> idx(k.slots(), 0);
  std::vector<double> moduli(k.slots());
  for (int flat = 0; flat < k.tuples_; ++flat) {
    for (int s = 0; s < k.slots(); ++s) moduli[s] = g.k_nodes[idx[s]];
    for (int ir = 0; ir < g.nr(); ++ir) k.at(flat, ir) = f(g.r_nodes[ir], moduli);
    for (int s = k.slots() - 1; s >= 0; --s) {
      if (++idx[s] < k.nk_) break;
      idx[s] = 0;
    }
  }
  return k;
}

int Kernel::flat_index(const std::vector<int>& k_idx) const {
  int flat = 0;
  for (int s = 0; s < slots(); ++s) flat = flat * nk_ + k_idx[s];
  return flat;
}

namespace {

Complex eval_impl(const Kernel& k, double r, const std::vector<double>& moduli,
                  bool drop_subgrid) {
  const auto& g = k.grid();
  if (static_cast<int>(moduli.size()) != k.slots())
    throw std::domain_error("Kernel::eval: modulus count does not match kernel order");

  const Segment rs = locate_segment(g.r_nodes, r);

  const int slots = k.slots();
  std::vector<int> base(slots);
  std::vector<double> frac(slots);
  for (int s = 0; s < slots; ++s) {
    const double x = moduli[s];
    if (drop_subgrid && x < g.k_nodes.front()) return Complex(0.0, 0.0);
    if (x <= g.k_nodes.front()) {
      base[s] = 0;
      frac[s] = 0.0;
    } else if (x >= g.k_nodes.back()) {
      base[s] = g.nk() - 2;
      frac[s] = 1.0;
    } else {
      const Segment ks = locate_segment(g.k_nodes, x);
      base[s] = ks.i;
      frac[s] = ks.t;
    }
  }

  Complex acc(0.0, 0.0);
  const int corners = 1 << slots;
  std::vector<int> idx(slots);
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    for (int s = 0; s < slots; ++s) {
      const bool hi = (c >> s) & 1;
      idx[s] = base[s] + (hi ? 1 : 0);
      w *= hi ? frac[s] : (1.0 - frac[s]);
    }
    if (w == 0.0) continue;
    const int flat = k.flat_index(idx);
    const Complex* row = k.r_row(flat);
    acc += w * ((1.0 - rs.t) * row[rs.i] + rs.t * row[rs.i + 1]);
  }
  return acc;
}

}  // namespace

Complex Kernel::eval(double r, const std::vector<double>& moduli) const {
  return eval_impl(*this, r, moduli, false);
}

Complex Kernel::eval_drop_subgrid(double r, const std::vector<double>& moduli) const {
  return eval_impl(*this, r, moduli, true);
}

Complex Kernel::eval_r_general(double r, const Complex* row) const {
  const Segment rs = locate_segment(grid_->r_nodes, r);
  return (1.0 - rs.t) * row[rs.i] + rs.t * row[rs.i + 1];
}

bool Kernel::same_shape(const Kernel& other) const {
  return m_ == other.m_ && n_ == other.n_ && grid_.get() == other.grid_.get();
}

double Kernel::max_abs() const {
  double m = 0.0;
  for (const Complex& v : values_) m = std::max(m, std::abs(v));
  return m;
}

const Kernel* KernelChain::find(int m, int n) const {
  for (const Kernel& k : higher) {
    if (k.m() == m && k.n() == n) return &k;
  }
  return nullptr;
}

void KernelChain::set(Kernel k) {
  if (k.grid_ptr().get() != w00.grid_ptr().get())
    throw std::domain_error("KernelChain::set: kernel grid differs from chain grid");
  if (k.order() == 0) {
    w00 = std::move(k);
    return;
  }
  for (Kernel& h : higher) {
    if (h.m() == k.m() && h.n() == k.n()) {
      h = std::move(k);
      return;
    }
  }
  higher.push_back(std::move(k));
}

void KernelChain::add_constant(Complex delta) {
  for (Complex& v : w00.values()) v += delta;
}

// --- norms -------------------------------------------------------------

double norm_mu_s(const Kernel& k, const BanachParams& p) {
  p.validate();
  const auto& g = k.grid();
  const int nr = g.nr();

  if (k.order() == 0) {
    double total = std::abs(k.at(0, 0));
    std::vector<Complex> row(k.r_row(0), k.r_row(0) + nr);
    for (int d = 1; d <= p.s; ++d) {
      row = fd_derivative(g.r_nodes, row.data(), nr);
      double sup = 0.0;
      for (const Complex& v : row) sup = std::max(sup, std::abs(v));
      total += sup;
    }
    return total;
  }

  // r is restricted to [0, 1] for interaction kernels.
  int nr_dom = 0;
  while (nr_dom < nr && g.r_nodes[nr_dom] <= 1.0 + 1e-14) ++nr_dom;

  // Per-tuple weight: max_j |k_j|^{-mu} over the tuple's slots.
  const int slots = k.slots();
  double total = 0.0;
  std::vector<Complex> row;
  std::vector<Complex> work;
  std::vector<int> idx(slots, 0);
  std::vector<double> sup_by_order(p.s + 1, 0.0);
  for (int flat = 0; flat < k.tuple_count(); ++flat) {
    double wmax = 0.0;
    for (int s = 0; s < slots; ++s)
      wmax = std::max(wmax, std::pow(g.k_nodes[idx[s]], -p.mu));
    row.assign(k.r_row(flat), k.r_row(flat) + nr);
    for (int d = 0; d <= p.s; ++d) {
      if (d > 0) row = fd_derivative(g.r_nodes, row.data(), nr);
      double sup = 0.0;
      for (int ir = 0; ir < nr_dom; ++ir) sup = std::max(sup, std::abs(row[ir]));
      sup_by_order[d] = std::max(sup_by_order[d], wmax * sup);
    }
    for (int s = slots - 1; s >= 0; --s) {
      if (++idx[s] < g.nk()) break;
      idx[s] = 0;
    }
  }
  for (double v : sup_by_order) total += v;
  return total;
}

double chain_norm(const KernelChain& chain, const BanachParams& p) {
  double total = 0.0;
  for (const Kernel& k : chain.higher)
    total += std::pow(p.xi, -k.order()) * norm_mu_s(k, p);
  return total;
}

// --- structure ----------------------------------------------------------

Kernel symmetrize(const Kernel& k) {
  if (k.order() == 0) return k;
  const int m = k.m(), n = k.n();
  const int nk = k.grid().nk();
  const int nr = k.grid().nr();

  std::vector<std::vector<int>> perms_m, perms_n;
  {
    std::vector<int> p(m);
    std::iota(p.begin(), p.end(), 0);
    do perms_m.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    std::vector<int> q(n);
    std::iota(q.begin(), q.end(), 0);
    do perms_n.push_back(q);
    while (std::next_permutation(q.begin(), q.end()));
  }
  const double inv = 1.0 / (perms_m.size() * perms_n.size());

  Kernel out(m, n, k.grid_ptr());
  std::vector<int> idx(m + n, 0), pidx(m + n);
  for (int flat = 0; flat < k.tuple_count(); ++flat) {
    for (const auto& pm : perms_m) {
      for (const auto& pn : perms_n) {
        for (int s = 0; s < m; ++s) pidx[s] = idx[pm[s]];
        for (int s = 0; s < n; ++s) pidx[m + s] = idx[m + pn[s]];
        const Complex* src = k.r_row(k.flat_index(pidx));
        Complex* dst = &out.at(flat, 0);
        for (int ir = 0; ir < nr; ++ir) dst[ir] += inv * src[ir];
      }
    }
    for (int s = m + n - 1; s >= 0; --s) {
      if (++idx[s] < nk) break;
      idx[s] = 0;
    }
  }
  return out;
}

bool is_symmetric(const Kernel& k, double tol) {
  if (k.order() == 0) return true;
  Kernel s = symmetrize(k);
  double diff = 0.0, scale = std::max(1.0, k.max_abs());
  for (size_t i = 0; i < s.values().size(); ++i)
    diff = std::max(diff, std::abs(s.values()[i] - k.values()[i]));
  return diff <= tol * scale;
}

KernelChain scale_chain(const KernelChain& chain, double rho) {
  if (rho <= 0.0 || rho > 0.5) throw std::domain_error("scale_chain: rho must lie in (0, 1/2]");
  const auto& g = chain.grid();
  const GridPtr gp = chain.grid_ptr();

  Kernel w00(0, 0, gp);
  for (int ir = 0; ir < g.nr(); ++ir)
    w00.at(0, ir) = chain.w00.eval_r(rho * g.r_nodes[ir], 0) / rho;
  KernelChain out(std::move(w00));

  std::vector<double> scaled_k;
  for (const Kernel& k : chain.higher) {
    Kernel sk(k.m(), k.n(), gp);
    const double pref = std::pow(rho, k.order() - 1);
    std::vector<int> idx(k.slots(), 0);
    std::vector<double> moduli(k.slots());
    for (int flat = 0; flat < k.tuple_count(); ++flat) {
      for (int s = 0; s < k.slots(); ++s) moduli[s] = rho * g.k_nodes[idx[s]];
      for (int ir = 0; ir < g.nr(); ++ir)
        sk.at(flat, ir) = pref * k.eval_drop_subgrid(rho * g.r_nodes[ir], moduli);
      for (int s = k.slots() - 1; s >= 0; --s) {
        if (++idx[s] < g.nk()) break;
        idx[s] = 0;
      }
    }
    out.higher.push_back(std::move(sk));
  }
  return out;
}

SplitETW split_etw(const KernelChain& chain) {
  const Complex E = chain.w00.at(0, 0);
  Kernel T = chain.w00;
  for (Complex& v : T.values()) v -= E;
  return SplitETW{E, std::move(T), chain.higher};
}

double sup_tprime_minus_one(const KernelChain& chain) {
  const auto& g = chain.grid();
  const int nr = g.nr();
  std::vector<Complex> d = fd_derivative(g.r_nodes, chain.w00.r_row(0), nr);
  double sup = 0.0;
  for (const Complex& v : d) sup = std::max(sup, std::abs(v - 1.0));
  return sup;
}

PolydiscReport polydisc_membership(const KernelChain& chain, double alpha, double beta,
                                   double gamma, const BanachParams& p) {
  PolydiscReport r;
  r.abs_E = std::abs(chain.w00.at(0, 0));
  r.sup_tprime_minus_one = sup_tprime_minus_one(chain);
  r.w1_norm = chain_norm(chain, p);
  const double slack = 1.0 + 1e-12;
  r.ok_E = r.abs_E <= alpha * slack;
  r.ok_T = r.sup_tprime_minus_one <= beta * slack;
  r.ok_W = r.w1_norm <= gamma * slack;
  return r;
}

bool chain_is_selfadjoint(const KernelChain& chain, double tol) {
  const double scale = std::max(1.0, chain.w00.max_abs());
  for (const Complex& v : chain.w00.values())
    if (std::abs(v.imag()) > tol * scale) return false;

  for (const Kernel& k : chain.higher) {
    const Kernel* mirror = chain.find(k.n(), k.m());
    if (!mirror) {
      if (k.max_abs() > tol) return false;
      continue;
    }
    // w_{m,n}(r; k_(m), kt_(n)) == conj(w_{n,m}(r; kt_(n), k_(m)))
    const int nk = k.grid().nk();
    const int nr = k.grid().nr();
    std::vector<int> idx(k.slots(), 0), swapped(k.slots());
    const double s = std::max(1.0, k.max_abs());
    for (int flat = 0; flat < k.tuple_count(); ++flat) {
      for (int i = 0; i < k.n(); ++i) swapped[i] = idx[k.m() + i];
      for (int i = 0; i < k.m(); ++i) swapped[k.n() + i] = idx[i];
      const Complex* a = k.r_row(flat);
      const Complex* b = mirror->r_row(mirror->flat_index(swapped));
      for (int ir = 0; ir < nr; ++ir)
        if (std::abs(a[ir] - std::conj(b[ir])) > tol * s) return false;
      for (int sl = k.slots() - 1; sl >= 0; --sl) {
        if (++idx[sl] < nk) break;
        idx[sl] = 0;
      }
    }
  }
  return true;
}

double chain_max_difference(const KernelChain& a, const KernelChain& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.w00.values().size(); ++i)
    d = std::max(d, std::abs(a.w00.values()[i] - b.w00.values()[i]));
  auto scan = [&d](const KernelChain& x, const KernelChain& y) {
    for (const Kernel& k : x.higher) {
      const Kernel* o = y.find(k.m(), k.n());
      for (size_t i = 0; i < k.values().size(); ++i) {
        const Complex other = o ? o->values()[i] : Complex(0.0, 0.0);
        d = std::max(d, std::abs(k.values()[i] - other));
      }
    }
  };
  scan(a, b);
  scan(b, a);
  return d;
}

}  // namespace srg
