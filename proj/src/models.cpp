#include "srg/models.hpp"

#include <cmath>

namespace srg {

KernelChain make_hf_chain(GridPtr grid) {
  Kernel w00(0, 0, grid);
  for (int i = 0; i < grid->nr(); ++i) w00.at(0, i) = grid->r_nodes[i];
  return KernelChain(std::move(w00));
}

KernelChain generate_toy_model(Complex g, double mu, GridPtr grid) {
  if (mu <= 0.0) throw std::domain_error("generate_toy_model: mu must be positive");
  KernelChain chain = make_hf_chain(grid);
  auto mono = [&](double, const std::vector<double>& k) { return g * std::pow(k[0], mu); };
  chain.higher.push_back(Kernel::from_function(1, 0, grid, mono));
  chain.higher.push_back(Kernel::from_function(0, 1, grid, mono));
  return chain;
}

Kernel random_kernel(int m, int n, GridPtr grid, std::mt19937_64& rng, double envelope_mu,
                     double scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int slots = m + n;
  const int nk = grid->nk();
  int tuples = 1;
  for (int s = 0; s < slots; ++s) tuples *= nk;

  std::vector<std::array<Complex, 3>> coeff(tuples);
  for (auto& c : coeff)
    for (auto& v : c) v = Complex(u(rng), u(rng));

  Kernel k(m, n, grid);
  const double rmax = grid->r_max();
  std::vector<int> idx(slots, 0);
  for (int flat = 0; flat < tuples; ++flat) {
    double env = 1.0;
    for (int s = 0; s < slots; ++s) env *= std::pow(grid->k_nodes[idx[s]], envelope_mu);
    for (int ir = 0; ir < grid->nr(); ++ir) {
      const double x = grid->r_nodes[ir] / rmax;
      k.at(flat, ir) =
          scale * env * (coeff[flat][0] + coeff[flat][1] * x + coeff[flat][2] * x * x) / 3.0;
    }
    for (int s = slots - 1; s >= 0; --s) {
      if (++idx[s] < nk) break;
      idx[s] = 0;
    }
  }
  return slots > 0 ? symmetrize(k) : k;
}

KernelChain random_chain(GridPtr grid, std::mt19937_64& rng, int order_max, double envelope_mu,
                         double gamma_scale, bool selfadjoint) {
  KernelChain chain = make_hf_chain(grid);
  for (int m = 0; m <= order_max; ++m) {
    for (int n = 0; n <= order_max - m; ++n) {
      if (m + n < 1) continue;
      if (selfadjoint && m < n) continue;  // filled by the mirror below
      Kernel k = random_kernel(m, n, grid, rng, envelope_mu, gamma_scale);
      if (selfadjoint && m == n) {
        // Average with the conjugate-mirrored values so the symmetry holds.
        Kernel mirror(m, n, grid);
        const int nk = grid->nk();
        std::vector<int> idx(m + n, 0), swapped(m + n);
        for (int flat = 0; flat < k.tuple_count(); ++flat) {
          for (int i = 0; i < n; ++i) swapped[i] = idx[m + i];
          for (int i = 0; i < m; ++i) swapped[n + i] = idx[i];
          const Complex* src = k.r_row(k.flat_index(swapped));
          for (int ir = 0; ir < grid->nr(); ++ir)
            mirror.at(flat, ir) = 0.5 * (k.at(flat, ir) + std::conj(src[ir]));
          for (int s = m + n - 1; s >= 0; --s) {
            if (++idx[s] < nk) break;
            idx[s] = 0;
          }
        }
        chain.set(std::move(mirror));
        continue;
      }
      if (selfadjoint && m > n) {
        Kernel mirror(n, m, grid);
        const int nk = grid->nk();
        std::vector<int> idx(m + n, 0), swapped(m + n);
        for (int flat = 0; flat < mirror.tuple_count(); ++flat) {
          // mirror slots: first n, last m; source slots swapped.
          for (int i = 0; i < m; ++i) swapped[i] = idx[n + i];
          for (int i = 0; i < n; ++i) swapped[m + i] = idx[i];
          const Complex* src = k.r_row(k.flat_index(swapped));
          for (int ir = 0; ir < grid->nr(); ++ir) mirror.at(flat, ir) = std::conj(src[ir]);
          for (int s = m + n - 1; s >= 0; --s) {
            if (++idx[s] < nk) break;
            idx[s] = 0;
          }
        }
        chain.set(std::move(k));
        chain.set(std::move(mirror));
        continue;
      }
      chain.set(std::move(k));
    }
  }
  return chain;
}

}  // namespace srg
