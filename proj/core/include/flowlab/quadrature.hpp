#pragma once

#include <vector>

namespace flowlab {

/// Gauss-Legendre nodes and weights on [0,1]; exact for polynomials of
/// degree <= 2n-1.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Computes (and memoizes) the n-point rule, n in [1, 64].
const GaussLegendre& gauss_legendre_01(int n);

}  // namespace flowlab
