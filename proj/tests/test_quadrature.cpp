#include <doctest.h>

#include <cmath>

#include "flowlab/quadrature.hpp"

using namespace flowlab;

namespace {

double integrate_monomial(int n_nodes, int k) {
  const auto& rule = gauss_legendre_01(n_nodes);
  double acc = 0;
  for (int i = 0; i < n_nodes; ++i) {
    acc += rule.weights[static_cast<size_t>(i)] * std::pow(rule.nodes[static_cast<size_t>(i)], k);
  }
  return acc;
}

}  // namespace

TEST_CASE("gauss-legendre is exact for polynomials up to degree 2n-1") {
  for (int n : {1, 2, 3, 5, 8, 16, 32}) {
    for (int k = 0; k <= 2 * n - 1; ++k) {
      CHECK(integrate_monomial(n, k) == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
    }
  }
}

TEST_CASE("one-point rule is the midpoint") {
  const auto& rule = gauss_legendre_01(1);
  CHECK(rule.nodes[0] == doctest::Approx(0.5));
  CHECK(rule.weights[0] == doctest::Approx(1.0));
}

TEST_CASE("weights are positive and sum to one") {
  for (int n : {4, 8, 20, 64}) {
    const auto& rule = gauss_legendre_01(n);
    double sum = 0;
    for (double w : rule.weights) {
      CHECK(w > 0);
      sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  }
}
