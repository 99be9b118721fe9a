#include "snslab/fem/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace snslab {
namespace {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

TetQuadrature grundmann_moeller(int s) {
  if (s < 0 || s > 8) throw std::invalid_argument("grundmann_moeller: s must lie in 0..8");
  constexpr int dim = 3;
  const int d = 2 * s + 1;
  TetQuadrature q;
  q.degree = d;
  for (int i = 0; i <= s; ++i) {
    const int denom = d + dim - 2 * i;
    // Weight for the reference simplex of volume 1/3!, rescaled to sum 1.
    const double w = (i % 2 == 0 ? 1.0 : -1.0) * std::pow(2.0, -2 * s) * std::pow(denom, d) /
                     (factorial(i) * factorial(d + dim - i)) * factorial(dim);
    const int level = s - i;
    for (int b0 = 0; b0 <= level; ++b0)
      for (int b1 = 0; b0 + b1 <= level; ++b1)
        for (int b2 = 0; b0 + b1 + b2 <= level; ++b2) {
          const int b3 = level - b0 - b1 - b2;
          q.points.push_back({(2.0 * b0 + 1) / denom, (2.0 * b1 + 1) / denom, (2.0 * b2 + 1) / denom,
                              (2.0 * b3 + 1) / denom});
          q.weights.push_back(w);
        }
  }
  return q;
}

}  // namespace snslab
