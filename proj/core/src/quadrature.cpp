#include "flowlab/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace flowlab {

namespace {

// Newton iteration on P_n over [-1,1], then affine map to [0,1].
GaussLegendre build(int n) {
  GaussLegendre rule;
  rule.nodes.resize(static_cast<size_t>(n));
  rule.weights.resize(static_cast<size_t>(n));
  const int mid = (n + 1) / 2;
  for (int i = 0; i < mid; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<size_t>(i)] = 0.5 * (1.0 - x);
    rule.nodes[static_cast<size_t>(n - 1 - i)] = 0.5 * (1.0 + x);
    rule.weights[static_cast<size_t>(i)] = 0.5 * w;
    rule.weights[static_cast<size_t>(n - 1 - i)] = 0.5 * w;
  }
  if (n == 1) {
    rule.nodes[0] = 0.5;
    rule.weights[0] = 1.0;
  }
  return rule;
}

}  // namespace

const GaussLegendre& gauss_legendre_01(int n) {
  if (n < 1 || n > 64) throw std::invalid_argument("gauss_legendre_01: n must be in [1, 64]");
  static std::map<int, GaussLegendre> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build(n)).first;
  return it->second;
}

}  // namespace flowlab
