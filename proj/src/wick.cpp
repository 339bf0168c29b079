#include "srg/wick.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <sstream>
#include <unordered_map>

#include "srg/cutoff.hpp"

namespace srg {

int WickTermIndex::total_m() const {
  int s = 0;
  for (const auto& f : factors) s += f[0];
  return s;
}

int WickTermIndex::total_n() const {
  int s = 0;
  for (const auto& f : factors) s += f[2];
  return s;
}

void WickTermIndex::validate() const {
  if (factors.empty()) throw std::domain_error("WickTermIndex: empty term");
  for (const auto& f : factors) {
    if (f[0] < 0 || f[1] < 0 || f[2] < 0 || f[3] < 0)
      throw std::domain_error("WickTermIndex: negative entry");
    if (f[0] + f[1] + f[2] + f[3] < 1)
      throw std::domain_error("WickTermIndex: factors need m+p+n+q >= 1");
  }
  if (total_m() == 0 && total_n() == 0) {
    if (L() < 2) throw std::domain_error("WickTermIndex: the (0,0) series starts at L = 2");
    for (const auto& f : factors)
      if (f[1] + f[3] < 1)
        throw std::domain_error("WickTermIndex: the (0,0) series needs p+q >= 1 per factor");
  }
}

// --- generalized monomial -------------------------------------------------

ComplexMatrix generalized_monomial(const KernelChain& chain, const TruncatedFock& fock, int m,
                                   int n, int p, int q, double r,
                                   const std::vector<double>& external) {
  if (static_cast<int>(external.size()) != m + n)
    throw std::domain_error("generalized_monomial: external length must be m+n");
  const Kernel* w = chain.find(m + p, n + q);
  if (!w) throw std::domain_error("generalized_monomial: kernel order (m+p, n+q) not stored");

  const int d = fock.dim();
  const int G = fock.n_modes();
  ComplexMatrix M = ComplexMatrix::Zero(d, d);
  std::vector<double> sqv(G);
  for (int i = 0; i < G; ++i) sqv[i] = std::sqrt(fock.modes().weight[i]);

  // Moduli layout: [ext cre, int cre, ext ann, int ann].
  std::vector<double> moduli(m + p + n + q);
  for (int s = 0; s < m; ++s) moduli[s] = external[s];
  for (int s = 0; s < n; ++s) moduli[m + p + s] = external[m + s];

  std::vector<int> ann(q), cre(p), occ;
  std::function<void(int, int)> ann_rec, cre_rec;
  int b_cur = 0, mid_idx = 0;
  double amp_ann = 1.0;

  for (int b = 0; b < d; ++b) {
    b_cur = b;
    std::function<void(int, std::vector<int>&, double)> do_ann =
        [&](int depth, std::vector<int>& state, double amp) {
          if (depth == q) {
            const int mid = fock.index_of(state);
            const double e_mid = fock.energy(mid);
            std::function<void(int, std::vector<int>&, double)> do_cre =
                [&](int cdepth, std::vector<int>& cstate, double camp) {
                  if (cdepth == p) {
                    const int a = fock.index_of(cstate);
                    if (a < 0) return;
                    Complex val = w->eval(e_mid + r, moduli);
                    double vprod = 1.0;
                    for (int s = 0; s < q; ++s) vprod *= sqv[ann[s]];
                    for (int s = 0; s < p; ++s) vprod *= sqv[cre[s]];
                    M(a, b_cur) += vprod * camp * val;
                    return;
                  }
                  for (int mode = 0; mode < G; ++mode) {
                    cre[cdepth] = mode;
                    moduli[m + cdepth] = fock.modes().kappa[mode];
                    ++cstate[mode];
                    int total = 0;
                    for (int x : cstate) total += x;
                    if (total <= fock.n_max())
                      do_cre(cdepth + 1, cstate,
                             camp * std::sqrt(static_cast<double>(cstate[mode])));
                    --cstate[mode];
                  }
                };
            do_cre(0, state, amp);
            return;
          }
          for (int mode = 0; mode < G; ++mode) {
            if (state[mode] == 0) continue;
            ann[depth] = mode;
            moduli[m + p + n + depth] = fock.modes().kappa[mode];
            const double f = std::sqrt(static_cast<double>(state[mode]));
            --state[mode];
            do_ann(depth + 1, state, amp * f);
            ++state[mode];
          }
        };
    occ = fock.state(b);
    do_ann(0, occ, 1.0);
  }

  for (int b = 0; b < d; ++b) {
    const double cb = chi1(fock.energy(b));
    for (int a = 0; a < d; ++a) M(a, b) *= chi1(fock.energy(a)) * cb;
  }
  return M;
}

// --- vacuum amplitude machinery --------------------------------------------

namespace {

// Occupancy of internal bosons during the product evaluation, kept sparse.
struct VOcc {
  // (mode, count), sorted by mode
  std::vector<std::pair<int, int>> occ;
  double energy = 0.0;
  int total = 0;

  uint64_t key() const {
    uint64_t k = 0;
    int shift = 0;
    for (const auto& [mode, count] : occ)
      for (int c = 0; c < count; ++c) {
        k |= static_cast<uint64_t>(mode + 1) << shift;
        shift += 8;
      }
    return k;
  }

  int count_of(int mode) const {
    for (const auto& [m, c] : occ)
      if (m == mode) return c;
    return 0;
  }

  void add(int mode, double kappa) {
    for (auto& [m, c] : occ)
      if (m == mode) {
        ++c;
        energy += kappa;
        ++total;
        return;
      }
    occ.emplace_back(mode, 1);
    std::sort(occ.begin(), occ.end());
    energy += kappa;
    ++total;
  }

  void remove(int mode, double kappa) {
    for (size_t i = 0; i < occ.size(); ++i)
      if (occ[i].first == mode) {
        if (--occ[i].second == 0) occ.erase(occ.begin() + i);
        energy -= kappa;
        --total;
        return;
      }
  }
};

struct VState {
  VOcc occ;
  std::vector<Complex> amp;  // one amplitude per spectral argument
};

// Per-factor context resolved against a concrete external tuple.
struct FactorCtx {
  const Kernel* kernel;
  int m, p, n, q;
  std::vector<int> ext_cre_nodes;   // k-node indices, -1 when off lattice
  std::vector<int> ext_ann_nodes;
  std::vector<double> ext_cre_vals; // current-scale moduli
  std::vector<double> ext_ann_vals;
  double r_shift;                   // current-scale kernel shift r_l
  double rt_shift_after;            // current-scale cutoff shift rt_l (l < L)
};

class VacuumEvaluator {
 public:
  VacuumEvaluator(const KernelChain& chain, const ModeSet& modes, double rho, int n_max,
                  double singular_tol)
      : chain_(chain), modes_(modes), rho_(rho), n_max_(n_max), singular_tol_(singular_tol) {
    const auto& g = chain.grid();
    nk_ = g.nk();
    const int G = modes.size();
    sqv_.resize(G);
    node_.resize(G);
    for (int i = 0; i < G; ++i) {
      sqv_[i] = std::sqrt(modes.weight[i]);
      const auto it = std::lower_bound(g.k_nodes.begin(), g.k_nodes.end(),
                                       modes.kappa[i] * (1.0 - 1e-12));
      if (it == g.k_nodes.end() || std::abs(*it - modes.kappa[i]) > 1e-12 * modes.kappa[i])
        throw std::domain_error("vacuum amplitude: chain grid does not carry the shell moduli");
      node_[i] = static_cast<int>(it - g.k_nodes.begin());
    }
  }

  // Amplitudes at spectral offsets etas (current scale), edge cutoffs
  // included: chi1(eta + rt_0) * <...> * chi1(eta + rt_L).
  std::vector<Complex> evaluate(const std::vector<FactorCtx>& factors, double rt0, double rtL,
                                const std::vector<double>& etas) {
    const int ne = static_cast<int>(etas.size());
    const int L = static_cast<int>(factors.size());

    std::vector<VState> states(1);
    states[0].amp.assign(ne, Complex(1.0, 0.0));

    for (int l = L - 1; l >= 0; --l) {
      states = apply_factor(factors[l], states, etas);
      if (states.empty()) break;
      if (l > 0) apply_resolvent(factors[l - 1].rt_shift_after, states, etas);
    }

    std::vector<Complex> out(ne, Complex(0.0, 0.0));
    for (const VState& s : states) {
      if (s.occ.total != 0) continue;
      for (int i = 0; i < ne; ++i)
        out[i] += s.amp[i] * chi1(etas[i] + rt0) * chi1(etas[i] + rtL);
    }
    return out;
  }

 private:
  Complex kernel_at(const Kernel& k, int flat, double arg) const {
    return k.eval_r(arg, flat);
  }

  void apply_resolvent(double rt, std::vector<VState>& states, const std::vector<double>& etas) {
    for (VState& s : states) {
      for (size_t i = 0; i < etas.size(); ++i) {
        const double X = s.occ.energy + etas[i] + rt;
        const double bar = chibar1(X / rho_);
        if (bar == 0.0) {
          s.amp[i] = Complex(0.0, 0.0);
          continue;
        }
        const Complex den = chain_.w00.eval_r(X, 0);
        if (std::abs(den) < singular_tol_) throw SingularAmplitude(std::abs(den));
        const double c = chi1(X);
        s.amp[i] *= (c * c * bar * bar) / den;
      }
    }
  }

  std::vector<VState> apply_factor(const FactorCtx& f, const std::vector<VState>& in,
                                   const std::vector<double>& etas) {
    const int ne = static_cast<int>(etas.size());
    std::vector<VState> out;
    std::unordered_map<uint64_t, int> index;

    const bool fast = f.kernel && on_nodes(f);
    std::vector<int> ann_modes(f.q), cre_modes(f.p);
    std::vector<Complex> vals(ne);

    for (const VState& s : in) {
      VOcc work = s.occ;
      ann_recurse(f, s, work, 0, 1.0, ann_modes, cre_modes, vals, etas, fast, out, index);
    }
    return out;
  }

  bool on_nodes(const FactorCtx& f) const {
    for (int v : f.ext_cre_nodes)
      if (v < 0) return false;
    for (int v : f.ext_ann_nodes)
      if (v < 0) return false;
    return true;
  }

  void ann_recurse(const FactorCtx& f, const VState& s, VOcc& work, int depth, double amp,
                   std::vector<int>& ann_modes, std::vector<int>& cre_modes,
                   std::vector<Complex>& vals, const std::vector<double>& etas, bool fast,
                   std::vector<VState>& out, std::unordered_map<uint64_t, int>& index) {
    if (depth == f.q) {
      cre_recurse(f, s, work, work.energy, 0, amp, ann_modes, cre_modes, vals, etas, fast, out,
                  index);
      return;
    }
    // Ordered draws over occupied modes.
    const auto occ_snapshot = work.occ;
    for (const auto& [mode, count] : occ_snapshot) {
      if (work.count_of(mode) == 0) continue;
      const double fac = std::sqrt(static_cast<double>(work.count_of(mode))) * sqv_[mode];
      ann_modes[depth] = mode;
      work.remove(mode, modes_.kappa[mode]);
      ann_recurse(f, s, work, depth + 1, amp * fac, ann_modes, cre_modes, vals, etas, fast, out,
                  index);
      work.add(mode, modes_.kappa[mode]);
    }
  }

  void cre_recurse(const FactorCtx& f, const VState& s, VOcc& work, double e_mid, int depth,
                   double amp, std::vector<int>& ann_modes, std::vector<int>& cre_modes,
                   std::vector<Complex>& vals, const std::vector<double>& etas, bool fast,
                   std::vector<VState>& out, std::unordered_map<uint64_t, int>& index) {
    if (depth == f.p) {
      emit(f, s, work, e_mid, amp, ann_modes, cre_modes, vals, etas, fast, out, index);
      return;
    }
    for (int mode = 0; mode < modes_.size(); ++mode) {
      if (work.total >= n_max_) break;
      const double fac = std::sqrt(static_cast<double>(work.count_of(mode) + 1)) * sqv_[mode];
      cre_modes[depth] = mode;
      work.add(mode, modes_.kappa[mode]);
      cre_recurse(f, s, work, e_mid, depth + 1, amp * fac, ann_modes, cre_modes, vals, etas, fast,
                  out, index);
      work.remove(mode, modes_.kappa[mode]);
    }
  }

  void emit(const FactorCtx& f, const VState& s, const VOcc& result, double e_mid, double amp,
            const std::vector<int>& ann_modes, const std::vector<int>& cre_modes,
            std::vector<Complex>& vals, const std::vector<double>& etas, bool fast,
            std::vector<VState>& out, std::unordered_map<uint64_t, int>& index) {
    const Kernel& k = *f.kernel;
    const int ne = static_cast<int>(etas.size());

    if (fast) {
      int flat = 0;
      for (int v : f.ext_cre_nodes) flat = flat * nk_ + v;
      for (int mode : cre_modes) flat = flat * nk_ + node_[mode];
      for (int v : f.ext_ann_nodes) flat = flat * nk_ + v;
      for (int mode : ann_modes) flat = flat * nk_ + node_[mode];
      for (int i = 0; i < ne; ++i)
        vals[i] = kernel_at(k, flat, e_mid + etas[i] + f.r_shift);
    } else {
      std::vector<double> moduli;
      moduli.reserve(k.slots());
      for (double v : f.ext_cre_vals) moduli.push_back(v);
      for (int mode : cre_modes) moduli.push_back(modes_.kappa[mode]);
      for (double v : f.ext_ann_vals) moduli.push_back(v);
      for (int mode : ann_modes) moduli.push_back(modes_.kappa[mode]);
      for (int i = 0; i < ne; ++i)
        vals[i] = k.eval_drop_subgrid(e_mid + etas[i] + f.r_shift, moduli);
    }

    const uint64_t key = result.key();
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, static_cast<int>(out.size()));
      out.emplace_back();
      out.back().occ = result;
      out.back().amp.assign(ne, Complex(0.0, 0.0));
      it = index.find(key);
    }
    VState& target = out[it->second];
    for (int i = 0; i < ne; ++i) target.amp[i] += s.amp[i] * amp * vals[i];
  }

  const KernelChain& chain_;
  const ModeSet& modes_;
  double rho_;
  int n_max_;
  double singular_tol_;
  int nk_;
  std::vector<double> sqv_;
  std::vector<int> node_;
};

// Memoized resolvent rows: D(X) = chi1(X)^2 chibar_rho(X)^2 / w00(X) sampled
// over the spectral offsets eta_i at base X0.  The bases are sums of shell
// moduli and repeat heavily across terms and tuples, so rows are cached by
// the bit pattern of X0.  D vanishes outside (0.9 rho, 1), which the stored
// window [lo, hi) reflects.
class DCache {
 public:
  struct Row {
    int lo = 0, hi = 0;  // nonzero index window
    std::vector<Complex> v;
  };

  DCache(const KernelChain& chain, double rho, double singular_tol,
         const std::vector<double>& etas)
      : chain_(chain), rho_(rho), singular_tol_(singular_tol), etas_(etas) {}

  const Row& get(double X0) {
    uint64_t key;
    static_assert(sizeof(key) == sizeof(X0));
    std::memcpy(&key, &X0, sizeof(key));
    auto it = rows_.find(key);
    if (it != rows_.end()) return it->second;

    Row row;
    const int ne = static_cast<int>(etas_.size());
    const double lo_x = 0.9 * rho_, hi_x = 1.0;
    int i = 0;
    while (i < ne && X0 + etas_[i] <= lo_x) ++i;
    row.lo = i;
    while (i < ne && X0 + etas_[i] < hi_x) ++i;
    row.hi = i;
    row.v.resize(std::max(row.hi - row.lo, 0));
    for (int j = row.lo; j < row.hi; ++j) {
      const double X = X0 + etas_[j];
      const double bar = chibar1(X / rho_);
      if (bar == 0.0) continue;
      const Complex den = chain_.w00.eval_r(X, 0);
      if (std::abs(den) < singular_tol_) throw SingularAmplitude(std::abs(den));
      const double c = chi1(X);
      row.v[j - row.lo] = (c * c * bar * bar) / den;
    }
    return rows_.emplace(key, std::move(row)).first->second;
  }

 private:
  const KernelChain& chain_;
  double rho_;
  double singular_tol_;
  const std::vector<double>& etas_;
  std::unordered_map<uint64_t, Row> rows_;
};

// Path-based engine for grid-tuple externals: the internal contraction
// structure (mode choices, bose factors, sqrt(v) products, intermediate
// energies) does not depend on the external tuple, so it is enumerated once
// per term and replayed over tuples with only kernel lookups and resolvent
// factors left to do.
class TermEngine {
 public:
  TermEngine(const KernelChain& chain, const ModeSet& modes, double rho, int n_max,
             double singular_tol, std::vector<std::array<int, 4>> factors,
             std::vector<const Kernel*> kernels, const std::vector<int>& mode_node)
      : chain_(chain),
        modes_(modes),
        rho_(rho),
        n_max_(n_max),
        singular_tol_(singular_tol),
        factors_(std::move(factors)),
        kernels_(std::move(kernels)),
        node_(mode_node) {
    L_ = static_cast<int>(factors_.size());
    nk_ = chain.grid().nk();
    gap_h_.assign(std::max(L_ - 1, 0), {});
    gap_h_index_.assign(std::max(L_ - 1, 0), {});

    // Flat-index strides of the external slots per factor; slot layout is
    // [ext cre (m), int cre (p), ext ann (n), int ann (q)].
    ext_stride_cre_.resize(L_);
    ext_stride_ann_.resize(L_);
    for (int l = 0; l < L_; ++l) {
      const auto [m, p, n, q] = factors_[l];
      const int slots = m + p + n + q;
      auto stride_of = [&](int pos) {
        int s = 1;
        for (int i = pos + 1; i < slots; ++i) s *= nk_;
        return s;
      };
      for (int s = 0; s < m; ++s) ext_stride_cre_[l].push_back(stride_of(s));
      for (int s = 0; s < n; ++s) ext_stride_ann_[l].push_back(stride_of(m + p + s));
    }

    VOcc vac;
    PathDraft draft;
    draft.factor.assign(L_, PathFactor{});
    draft.gap.assign(std::max(L_ - 1, 0), 0);
    enumerate(L_ - 1, vac, 1.0, draft);
  }

  int path_count() const { return static_cast<int>(paths_.size()); }

  // Accumulates coeff * V(eta_i) for the given external node tuple into acc.
  // Node indices refer to the chain grid (current scale, already shifted one
  // shell down by the caller).
  void accumulate(const std::vector<int>& ext_cre_nodes, const std::vector<int>& ext_ann_nodes,
                  const std::vector<double>& etas, Complex coeff, Complex* acc, DCache& dcache) {
    if (paths_.empty()) return;
    const int ne = static_cast<int>(etas.size());
    const auto& knodes = chain_.grid().k_nodes;

    // Pull-through shifts from the external moduli.
    std::vector<double> cre_sum(L_, 0.0), ann_sum(L_, 0.0);
    std::vector<int> base_flat(L_, 0);
    {
      int om = 0, on = 0;
      for (int l = 0; l < L_; ++l) {
        const auto [m, p, n, q] = factors_[l];
        for (int s = 0; s < m; ++s) {
          cre_sum[l] += knodes[ext_cre_nodes[om + s]];
          base_flat[l] += ext_cre_nodes[om + s] * ext_stride_cre_[l][s];
        }
        for (int s = 0; s < n; ++s) {
          ann_sum[l] += knodes[ext_ann_nodes[on + s]];
          base_flat[l] += ext_ann_nodes[on + s] * ext_stride_ann_[l][s];
        }
        om += m;
        on += n;
      }
    }
    std::vector<double> r_shift(L_, 0.0), rt_shift(std::max(L_ - 1, 0), 0.0);
    double rt0 = 0.0, rtL = 0.0;
    for (int l = 0; l < L_; ++l) {
      rt0 += cre_sum[l];
      rtL += ann_sum[l];
      for (int j = 0; j < L_; ++j) {
        if (j < l) r_shift[l] += ann_sum[j];
        if (j > l) r_shift[l] += cre_sum[j];
      }
    }
    for (int g = 0; g + 1 < L_; ++g) {
      // gap g sits between factors_[g] and factors_[g+1]
      for (int j = 0; j < L_; ++j) {
        if (j <= g) rt_shift[g] += ann_sum[j];
        if (j > g) rt_shift[g] += cre_sum[j];
      }
    }

    // Edge cutoffs vanish once eta + shift reaches 1; the window is an
    // initial segment of the nodes.
    edge_.resize(ne);
    int edge_hi = 0;
    for (int i = 0; i < ne; ++i) {
      edge_[i] = chi1(etas[i] + rt0) * chi1(etas[i] + rtL);
      if (edge_[i] != 0.0) edge_hi = i + 1;
    }
    if (edge_hi == 0) return;

    // Resolvent rows per gap and distinct intermediate energy.
    row_ptr_.resize(L_ > 1 ? L_ - 1 : 0);
    for (int g = 0; g + 1 < L_; ++g) {
      row_ptr_[g].clear();
      for (double h : gap_h_[g]) row_ptr_[g].push_back(&dcache.get(h + rt_shift[g]));
    }

    for (const Path& path : paths_) {
      int lo = 0, hi = edge_hi;
      const DCache::Row* rows[5];
      for (int g = 0; g + 1 < L_; ++g) {
        rows[g] = row_ptr_[g][path.gap[g]];
        lo = std::max(lo, rows[g]->lo);
        hi = std::min(hi, rows[g]->hi);
      }
      if (lo >= hi) continue;
      for (int i = lo; i < hi; ++i) {
        Complex prod = path.amp * edge_[i];
        for (int l = 0; l < L_; ++l) {
          const int flat = base_flat[l] + path.factor[l].flat_int;
          prod *= kernels_[l]->eval_r(path.factor[l].e_mid + r_shift[l] + etas[i], flat);
        }
        for (int g = 0; g + 1 < L_; ++g) prod *= rows[g]->v[i - rows[g]->lo];
        acc[i] += coeff * prod;
      }
    }
  }

 private:
  struct PathFactor {
    int flat_int = 0;    // internal-slot part of the kernel flat index
    double e_mid = 0.0;  // internal energy after the annihilations
  };
  struct PathDraft {
    std::vector<PathFactor> factor;
    std::vector<int> gap;
  };
  struct Path {
    double amp;
    std::array<PathFactor, 6> factor;
    std::array<int, 5> gap;
  };

  // Right-to-left enumeration of internal mode assignments.
  void enumerate(int l, VOcc& state, double amp, PathDraft& draft) {
    if (l < 0) {
      if (state.total != 0) return;
      Path p;
      p.amp = amp;
      for (int i = 0; i < L_; ++i) p.factor[i] = draft.factor[i];
      for (int i = 0; i + 1 < L_; ++i) p.gap[i] = draft.gap[i];
      paths_.push_back(p);
      return;
    }
    ann_draws(l, 0, state, amp, 0, draft);
  }

  void ann_draws(int l, int depth, VOcc& state, double amp, int flat_int, PathDraft& draft) {
    const auto [m, pp, n, qq] = factors_[l];
    if (depth == qq) {
      draft.factor[l].e_mid = state.energy;
      cre_draws(l, 0, state, amp, flat_int, draft);
      return;
    }
    const int slots = m + pp + n + qq;
    const int pos = m + pp + n + depth;
    int stride = 1;
    for (int i = pos + 1; i < slots; ++i) stride *= nk_;
    const auto snapshot = state.occ;
    for (const auto& [mode, count0] : snapshot) {
      const int count = state.count_of(mode);
      if (count == 0) continue;
      const double fac = std::sqrt(static_cast<double>(count) * modes_.weight[mode]);
      state.remove(mode, modes_.kappa[mode]);
      ann_draws(l, depth + 1, state, amp * fac, flat_int + node_[mode] * stride, draft);
      state.add(mode, modes_.kappa[mode]);
    }
  }

  void cre_draws(int l, int depth, VOcc& state, double amp, int flat_int, PathDraft& draft) {
    const auto [m, pp, n, qq] = factors_[l];
    if (depth == pp) {
      draft.factor[l].flat_int = flat_int;
      if (l > 0) {
        // register the intermediate state energy for the gap to the left
        const int g = l - 1;
        const uint64_t key = state.key();
        auto it = gap_h_index_[g].find(key);
        int idx;
        if (it == gap_h_index_[g].end()) {
          idx = static_cast<int>(gap_h_[g].size());
          gap_h_[g].push_back(state.energy);
          gap_h_index_[g].emplace(key, idx);
        } else {
          idx = it->second;
        }
        draft.gap[g] = idx;
      }
      enumerate(l - 1, state, amp, draft);
      return;
    }
    const int slots = m + pp + n + qq;
    const int pos = m + depth;
    int stride = 1;
    for (int i = pos + 1; i < slots; ++i) stride *= nk_;
    for (int mode = 0; mode < modes_.size(); ++mode) {
      if (state.total >= n_max_) break;
      const double fac = std::sqrt((state.count_of(mode) + 1.0) * modes_.weight[mode]);
      state.add(mode, modes_.kappa[mode]);
      cre_draws(l, depth + 1, state, amp * fac, flat_int + node_[mode] * stride, draft);
      state.remove(mode, modes_.kappa[mode]);
    }
  }

  const KernelChain& chain_;
  const ModeSet& modes_;
  double rho_;
  int n_max_;
  double singular_tol_;
  std::vector<std::array<int, 4>> factors_;
  std::vector<const Kernel*> kernels_;
  std::vector<int> node_;
  int L_, nk_;
  std::vector<Path> paths_;
  std::vector<std::vector<double>> gap_h_;
  std::vector<std::unordered_map<uint64_t, int>> gap_h_index_;
  std::vector<std::vector<int>> ext_stride_cre_, ext_stride_ann_;
  std::vector<std::vector<const DCache::Row*>> row_ptr_;
  std::vector<double> edge_;
};

std::vector<int> chain_mode_nodes(const KernelChain& chain, const ModeSet& modes) {
  const auto& knodes = chain.grid().k_nodes;
  std::vector<int> node(modes.size());
  for (int i = 0; i < modes.size(); ++i) {
    const auto it = std::lower_bound(knodes.begin(), knodes.end(), modes.kappa[i] * (1.0 - 1e-12));
    if (it == knodes.end() || std::abs(*it - modes.kappa[i]) > 1e-12 * modes.kappa[i])
      throw std::domain_error("renormalized_chain: chain grid does not carry the shell moduli");
    node[i] = static_cast<int>(it - knodes.begin());
  }
  return node;
}

}  // namespace

Complex vacuum_amplitude(const WickTermIndex& term, const KernelChain& chain,
                         const ModeSet& modes, double rho, double r,
                         const std::vector<double>& external_creation,
                         const std::vector<double>& external_annihilation, int n_max) {
  term.validate();
  if (static_cast<int>(external_creation.size()) != term.total_m() ||
      static_cast<int>(external_annihilation.size()) != term.total_n())
    throw std::domain_error("vacuum_amplitude: external tuple sizes do not match the term");

  const int L = term.L();
  std::vector<FactorCtx> ctx(L);
  int off_m = 0, off_n = 0;
  for (int l = 0; l < L; ++l) {
    const auto [m, p, n, q] = term.factors[l];
    ctx[l].m = m;
    ctx[l].p = p;
    ctx[l].n = n;
    ctx[l].q = q;
    ctx[l].kernel = chain.find(m + p, n + q);
    if (!ctx[l].kernel)
      throw std::domain_error("vacuum_amplitude: kernel order (m+p, n+q) not stored");
    for (int s = 0; s < m; ++s) {
      ctx[l].ext_cre_vals.push_back(rho * external_creation[off_m + s]);
      ctx[l].ext_cre_nodes.push_back(-1);
    }
    for (int s = 0; s < n; ++s) {
      ctx[l].ext_ann_vals.push_back(rho * external_annihilation[off_n + s]);
      ctx[l].ext_ann_nodes.push_back(-1);
    }
    off_m += m;
    off_n += n;
  }

  // Pull-through shifts at the current scale (external moduli enter scaled).
  auto sum = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  };
  for (int l = 0; l < L; ++l) {
    double rl = 0.0, rtl = 0.0;
    for (int j = 0; j < L; ++j) {
      const double cre = sum(ctx[j].ext_cre_vals);
      const double ann = sum(ctx[j].ext_ann_vals);
      if (j < l) rl += ann;
      if (j > l) rl += cre;
      if (j <= l) rtl += ann;
      if (j > l) rtl += cre;
    }
    ctx[l].r_shift = rl;          // eta = rho * r added inside the evaluator
    ctx[l].rt_shift_after = rtl;
  }
  double rt0 = 0.0, rtL = 0.0;
  for (int j = 0; j < L; ++j) {
    rt0 += sum(ctx[j].ext_cre_vals);
    rtL += sum(ctx[j].ext_ann_vals);
  }

  VacuumEvaluator ev(chain, modes, rho, n_max, 1e-12);
  const std::vector<double> etas{rho * r};
  return ev.evaluate(ctx, rt0, rtL, etas)[0];
}

// --- renormalized chain -----------------------------------------------------

namespace {

struct Term {
  std::vector<std::array<int, 4>> factors;  // (m, p, n, q)
  std::vector<const Kernel*> kernels;
  double coeff;       // sign * binomial products
  double crude_bound; // magnitude bound used for pruning
};

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// All terms contributing to the (M, N) output at series orders L <= L_max.
std::vector<Term> enumerate_terms(const KernelChain& chain, int M, int N, int L_max, int n_max,
                                  double rho, double sqv_sum) {
  std::vector<Term> terms;
  std::vector<std::array<int, 4>> factors;

  std::function<void(int, int, int)> rec = [&](int l, int rem_m, int rem_n) {
    const int L = static_cast<int>(factors.size());
    if (l == L) {
      if (rem_m || rem_n) return;
      // Vacuum flux: running right-to-left, never draw from an empty state,
      // end balanced, stay within the boson cap.
      int cur = 0;
      for (int j = L - 1; j >= 0; --j) {
        if (factors[j][3] > cur) return;
        cur += factors[j][1] - factors[j][3];
        if (cur > n_max) return;
      }
      if (cur != 0) return;

      Term t;
      t.factors = factors;
      t.coeff = (L % 2 == 1) ? 1.0 : -1.0;
      t.crude_bound = std::pow(rho, M + N - 1) * std::pow(4.0 / (3.0 * rho), L - 1);
      for (const auto& f : factors) {
        const Kernel* k = chain.find(f[0] + f[1], f[2] + f[3]);
        if (!k) return;
        t.kernels.push_back(k);
        t.coeff *= binom(f[0] + f[1], f[1]) * binom(f[2] + f[3], f[3]);
        t.crude_bound *= k->max_abs() * std::pow(sqv_sum, f[1] + f[3]) *
                         std::pow(n_max + 1.0, 0.5 * (f[1] + f[3]));
      }
      t.crude_bound *= std::abs(t.coeff);
      terms.push_back(std::move(t));
      return;
    }
    for (int m = 0; m <= rem_m; ++m)
      for (int n = 0; n <= rem_n; ++n)
        for (int p = 0; p + m <= 4; ++p)
          for (int q = 0; q + n <= 4; ++q) {
            if (m + p + n + q < 1) continue;
            if (!chain.find(m + p, n + q)) continue;
            factors[l] = {m, p, n, q};
            rec(l + 1, rem_m - m, rem_n - n);
          }
    factors[l] = {0, 0, 0, 0};
  };

  for (int L = 1; L <= L_max; ++L) {
    factors.assign(L, {0, 0, 0, 0});
    rec(0, M, N);
  }
  return terms;
}

}  // namespace

RenormResult renormalized_chain(const KernelChain& chain, const ModeSet& modes,
                                const RenormOptions& opt, const BanachParams& p) {
  if (opt.rho <= 0.0 || opt.rho > 0.5)
    throw std::domain_error("renormalized_chain: rho must lie in (0, 1/2]");
  if (opt.L_max < 2) throw std::domain_error("renormalized_chain: L_max must be >= 2");
  if (opt.M_max < 1) throw std::domain_error("renormalized_chain: M_max must be >= 1");

  if (opt.check_polydisc) {
    // Membership in D(rho/8, 1/8, rho/8) is the sufficient admissibility
    // condition.  Outside of it the map can still be well defined (the fixed
    // line tau H_f with |tau - 1| > 1/8 is the canonical case), so fall back
    // to the actual requirement: the resolvent denominators on the decimated
    // band stay away from zero by more than the interaction can close.
    const PolydiscReport pd =
        polydisc_membership(chain, opt.rho / 8.0, 1.0 / 8.0, opt.rho / 8.0, p);
    if (!pd.ok()) {
      double den_min = std::numeric_limits<double>::infinity();
      const double x_hi = 1.0 + chain.grid().r_max();
      for (int i = 0; i <= 4000; ++i) {
        const double X = 0.9 * opt.rho + (x_hi - 0.9 * opt.rho) * i / 4000.0;
        den_min = std::min(den_min, std::abs(chain.w00.eval_r(X, 0)));
      }
      int max_order = 0;
      for (const Kernel& k : chain.higher) max_order = std::max(max_order, k.order());
      const double w_bound =
          std::pow(modes.total_weight(), 0.5 * max_order) * p.xi * pd.w1_norm;
      if (den_min <= w_bound + 0.02 * opt.rho) {
        std::ostringstream os;
        os << "renormalized_chain: chain outside the polydisc D(rho/8, 1/8, rho/8) and the "
              "decimated block is not safely invertible: |E|="
           << pd.abs_E << " sup|T'-1|=" << pd.sup_tprime_minus_one
           << " ||w1||=" << pd.w1_norm << " denominator margin=" << den_min;
        throw std::domain_error(os.str());
      }
    }
  }

  const auto& g = chain.grid();
  const GridPtr gp = chain.grid_ptr();
  const double rho = opt.rho;
  const int nr = g.nr();
  const int nk = g.nk();

  double sqv_sum = 0.0;
  for (double v : modes.weight) sqv_sum += std::sqrt(v);
  const std::vector<int> mode_node = chain_mode_nodes(chain, modes);

  std::vector<double> etas(nr);
  for (int i = 0; i < nr; ++i) etas[i] = rho * g.r_nodes[i];
  DCache dcache(chain, rho, opt.singular_tol, etas);

  RenormResult result{KernelChain(Kernel(0, 0, gp)), RenormReport{}};
  result.report.per_L_chain_norm.assign(opt.L_max + 1, 0.0);

  // Leading part of the (0,0) flow: rho^{-1} w00(rho r).
  for (int i = 0; i < nr; ++i)
    result.chain.w00.at(0, i) = chain.w00.eval_r(etas[i], 0) / rho;

  struct EngineSet {
    std::vector<std::unique_ptr<TermEngine>> engines;
    std::vector<double> coeffs;
    std::vector<int> L;
  };
  auto build_engines = [&](const std::vector<Term>& terms) {
    EngineSet es;
    for (const Term& t : terms) {
      if (opt.prune_tol > 0.0 && t.crude_bound < opt.prune_tol) {
        result.report.pruned_bound += t.crude_bound;
        continue;
      }
      es.engines.push_back(std::make_unique<TermEngine>(chain, modes, rho, opt.n_max,
                                                        opt.singular_tol, t.factors, t.kernels,
                                                        mode_node));
      es.coeffs.push_back(t.coeff);
      es.L.push_back(static_cast<int>(t.factors.size()));
    }
    return es;
  };
  auto eval_at = [&](EngineSet& es, const std::vector<int>& cre_old,
                     const std::vector<int>& ann_old,
                     std::vector<std::vector<Complex>>& per_L_out) {
    for (size_t i = 0; i < es.engines.size(); ++i)
      es.engines[i]->accumulate(cre_old, ann_old, etas, es.coeffs[i],
                                per_L_out[es.L[i]].data(), dcache);
  };

  // -- (0,0) series ----------------------------------------------------------
  {
    EngineSet es = build_engines(enumerate_terms(chain, 0, 0, opt.L_max, opt.n_max, rho,
                                                 sqv_sum));
    std::vector<std::vector<Complex>> per_L(opt.L_max + 1, std::vector<Complex>(nr));
    eval_at(es, {}, {}, per_L);
    for (int L = 2; L <= opt.L_max; ++L) {
      for (int i = 0; i < nr; ++i) {
        const double outer = chi1(g.r_nodes[i]);
        result.chain.w00.at(0, i) += outer * outer * per_L[L][i] / rho;
      }
    }
  }

  // -- retained interaction orders -------------------------------------------
  std::vector<std::vector<Complex>> acc(opt.L_max + 1, std::vector<Complex>(nr));
  for (int M = 0; M <= opt.M_max; ++M) {
    for (int N = 0; N <= opt.M_max - M; ++N) {
      if (M + N < 1) continue;
      EngineSet es = build_engines(enumerate_terms(chain, M, N, opt.L_max, opt.n_max, rho,
                                                   sqv_sum));
      if (es.engines.empty()) continue;

      const int slots = M + N;
      std::vector<Kernel> per_L;
      for (int L = 0; L <= opt.L_max; ++L) per_L.emplace_back(M, N, gp);

      // node 0 sources from below the resolved shells and stays zero
      std::vector<int> ext(slots, 1), cre_old(M), ann_old(N);
      const double pref = std::pow(rho, M + N - 1);
      bool done = false;
      while (!done) {
        for (auto& row : acc) std::fill(row.begin(), row.end(), Complex(0.0, 0.0));
        for (int s = 0; s < M; ++s) cre_old[s] = ext[s] - 1;
        for (int s = 0; s < N; ++s) ann_old[s] = ext[M + s] - 1;
        eval_at(es, cre_old, ann_old, acc);
        int flat = 0;
        for (int s = 0; s < slots; ++s) flat = flat * nk + ext[s];
        for (int L = 1; L <= opt.L_max; ++L)
          for (int i = 0; i < nr; ++i) per_L[L].at(flat, i) = pref * acc[L][i];

        int s = slots - 1;
        for (; s >= 0; --s) {
          if (++ext[s] < nk) break;
          ext[s] = 1;
        }
        if (s < 0) done = true;
      }

      Kernel total(M, N, gp);
      for (int L = 1; L <= opt.L_max; ++L) {
        Kernel sym = symmetrize(per_L[L]);
        result.report.per_L_chain_norm[L] += std::pow(p.xi, -(M + N)) * norm_mu_s(sym, p);
        for (size_t i = 0; i < total.values().size(); ++i)
          total.values()[i] += sym.values()[i];
      }
      if (total.max_abs() > 0.0) result.chain.higher.push_back(std::move(total));
    }
  }

  // -- tail and dropped-order estimates ---------------------------------------
  {
    const auto& perL = result.report.per_L_chain_norm;
    if (opt.L_max >= 3 && perL[opt.L_max - 1] > 0.0) {
      const double B = perL[opt.L_max] / perL[opt.L_max - 1];
      result.report.neumann_tail_estimate =
          (B < 1.0) ? perL[opt.L_max] * B / (1.0 - B) : perL[opt.L_max];
    }
  }
  // Probe the first discarded order on a sparse tuple set.
  for (int M = 0; opt.estimate_dropped && M <= opt.M_max + 1; ++M) {
    const int N = opt.M_max + 1 - M;
    if (N < 0) continue;
    EngineSet es = build_engines(enumerate_terms(chain, M, N, opt.L_max, opt.n_max, rho,
                                                 sqv_sum));
    if (es.engines.empty()) continue;
    double sup = 0.0;
    for (int jn : {1, nk / 2, nk - 1}) {
      if (jn < 1 || jn >= nk) continue;
      std::vector<int> cre_old(M, jn - 1), ann_old(N, jn - 1);
      for (auto& row : acc) std::fill(row.begin(), row.end(), Complex(0.0, 0.0));
      eval_at(es, cre_old, ann_old, acc);
      for (int L = 1; L <= opt.L_max; ++L)
        for (int i = 0; i < nr; ++i) sup = std::max(sup, std::abs(acc[L][i]));
    }
    result.report.dropped_order_estimate +=
        std::pow(p.xi, -(M + N)) * std::pow(rho, M + N - 1) * sup;
  }

  return result;
}

WickDiagnostics wick_norm_diagnostics(const KernelChain& chain, const KernelChain& hat_chain,
                                      double rho, const BanachParams& p) {
  WickDiagnostics d;
  d.c_chi = cutoff_cchi(p.s);
  d.xi_theory = std::sqrt(rho) / (4.0 * d.c_chi);

  d.measured_w1_hat = chain_norm(hat_chain, p);
  const Complex E = chain.w00.at(0, 0);
  const Complex Ehat = hat_chain.w00.at(0, 0);
  d.measured_E_shift = std::abs(Ehat - E / rho);
  d.measured_T_prime = sup_tprime_minus_one(hat_chain);

  BanachParams pt = p;
  pt.xi = d.xi_theory;
  d.theory_w1_in = chain_norm(chain, pt);
  d.theory_w1_hat = chain_norm(hat_chain, pt);
  d.bound_w1 = 256.0 * d.c_chi * d.c_chi * std::pow(rho, p.mu) * d.theory_w1_in;
  const double core = d.c_chi * d.xi_theory * d.theory_w1_in / rho;
  d.bound_E = 24.0 * d.c_chi * core * core;
  d.bound_T = sup_tprime_minus_one(chain) + 24.0 * d.c_chi * rho * core * core;
  return d;
}

}  // namespace srg
