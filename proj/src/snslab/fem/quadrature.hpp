#pragma once

#include <array>
#include <vector>

namespace snslab {

/// Quadrature on a tetrahedron in barycentric coordinates. Weights sum to 1,
/// so the integral over a tet T is |T| * sum_q w_q f(x_q).
struct TetQuadrature {
  int degree = 0;
  std::vector<std::array<double, 4>> points;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

/// Grundmann-Moeller rule of degree 2s+1. Some weights are negative for s >= 1.
TetQuadrature grundmann_moeller(int s);

}  // namespace snslab
