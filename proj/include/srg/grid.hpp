#pragma once

#include <memory>
#include <vector>

#include "srg/modeset.hpp"

namespace srg {

// Sampling grid for coupling kernels: photon-energy nodes r in [0, R_max]
// (r_nodes[0] == 0, R_max >= 1) and momentum-modulus nodes k in (0, 1],
// both strictly increasing with at least 4 nodes each.
struct RadialGrid {
  std::vector<double> r_nodes;
  std::vector<double> k_nodes;
  bool r_uniform = false;   // uniform spacing enables O(1) interpolation
  double r_step_inv = 0.0;

  RadialGrid(std::vector<double> r, std::vector<double> k);

  int nr() const { return static_cast<int>(r_nodes.size()); }
  int nk() const { return static_cast<int>(k_nodes.size()); }
  double r_max() const { return r_nodes.back(); }

  // Uniform r grid on [0, r_max] with the k nodes of a geometric shell set.
  static std::shared_ptr<const RadialGrid> make(int nr, double r_max, const ModeSet& modes);
};

using GridPtr = std::shared_ptr<const RadialGrid>;

// Weighted-norm parameters: |k|^{-mu} weight, smoothness order s, and the
// order weight xi of the chain norm.
struct BanachParams {
  double mu = 0.5;
  int s = 1;
  double xi = 0.25;

  void validate() const;
};

// Segment lookup for linear interpolation on ascending nodes: returns the
// left node index i and the local coordinate t with x ~ nodes[i] + t * h_i.
// Past the last node, (i, t) continue the final segment (t > 1); left of the
// first node, (0, t) with t < 0 continue the first segment.
struct Segment {
  int i;
  double t;
};
Segment locate_segment(const std::vector<double>& nodes, double x);

}  // namespace srg
