#pragma once

// Continuous P2 velocity / P1 pressure (Taylor-Hood) on the periodic mesh.
//
// Scalar P2 numbering: vertices first, then n^3 + edge id. Velocity vectors
// are component-major (c * scalar_dofs() + s). Pressure DOFs are vertices.

#include <Eigen/Sparse>
#include <functional>
#include <memory>

#include "snslab/fem/mesh.hpp"
#include "snslab/fem/quadrature.hpp"

namespace snslab {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// P2 basis (and P1 hats) tabulated at the points of one quadrature rule.
struct Tabulation {
  TetQuadrature rule;
  std::vector<std::array<double, 10>> p2;  // [q]
  std::vector<std::array<double, 4>> p1;   // [q]
  /// [type][q][i]: gradient of P2 basis function i.
  std::array<std::vector<std::array<Vec3, 10>>, PeriodicMesh::kTypes> p2_grad;
  /// [type][q]: physical offset of the point from the cube origin.
  std::array<std::vector<Vec3>, PeriodicMesh::kTypes> offset;

  std::size_t points() const { return rule.size(); }
};

class TaylorHoodSpace {
 public:
  explicit TaylorHoodSpace(int n);

  const PeriodicMesh& mesh() const { return mesh_; }
  int n() const { return mesh_.n(); }
  double h() const { return mesh_.h(); }

  int scalar_dofs() const { return mesh_.vertex_count() + mesh_.edge_count(); }
  int velocity_dofs() const { return 3 * scalar_dofs(); }
  int pressure_dofs() const { return mesh_.vertex_count(); }

  std::array<int, 10> local_dofs(int tet) const;
  Vec3 dof_position(int s) const;

  /// Degree 5: exact for the mass, stiffness, divergence and convection forms.
  const Tabulation& assembly_rule() const { return assembly_; }
  /// Degree 7: loads and errors of non-polynomial data.
  const Tabulation& accurate_rule() const { return accurate_; }

  const SparseMatrix& scalar_mass() const { return scalar_mass_; }
  const SparseMatrix& scalar_stiffness() const { return scalar_stiffness_; }
  /// B[p, c*S + s] = int psi_p d_c phi_s.
  const SparseMatrix& divergence() const { return divergence_; }
  const SparseMatrix& pressure_mass() const { return pressure_mass_; }
  /// int psi_p, the pressure mean functional.
  const Eigen::VectorXd& pressure_weights() const { return pressure_weights_; }

  SparseMatrix velocity_mass() const;
  SparseMatrix velocity_stiffness() const;

  void dump(std::ostream& out) const;

 private:
  Tabulation tabulate(int s) const;
  void assemble_static();

  PeriodicMesh mesh_;
  Tabulation assembly_;
  Tabulation accurate_;
  SparseMatrix scalar_mass_, scalar_stiffness_, divergence_, pressure_mass_;
  Eigen::VectorXd pressure_weights_;
};

/// I_3 (x) s.
SparseMatrix block_diagonal(const SparseMatrix& s);

struct FemState {
  Eigen::VectorXd velocity;
  Eigen::VectorXd pressure;
  bool divergence_free = false;
};

FemState zero_state(const TaylorHoodSpace& space);

/// Values (and gradients, grad[i][j] = d_j v_i) at every point of a rule,
/// indexed ((type * points + q) * cubes + cube).
struct QuadSamples {
  std::vector<Vec3> value;
  std::vector<std::array<Vec3, 3>> grad;
};

std::size_t sample_index(const TaylorHoodSpace& space, const Tabulation& tab, int type, std::size_t q, int cube);

using PointFunction = std::function<Vec3(const Vec3&)>;
using PointGradient = std::function<std::array<Vec3, 3>(const Vec3&)>;

QuadSamples sample_function(const TaylorHoodSpace& space, const Tabulation& tab, const PointFunction& f,
                            const PointGradient& grad = {});
QuadSamples sample_spectral(const TaylorHoodSpace& space, const Tabulation& tab, const SpectralField& v);
QuadSamples sample_state(const TaylorHoodSpace& space, const Tabulation& tab, const Eigen::VectorXd& velocity);

/// int v . phi_i for every velocity basis function.
Eigen::VectorXd load_vector(const TaylorHoodSpace& space, const Tabulation& tab, const QuadSamples& samples);

/// Nodal P2 interpolant (not discretely divergence-free in general).
FemState interpolate(const TaylorHoodSpace& space, const PointFunction& f);

/// ||u||_M^2 = u^T M u and |u|_A^2 = u^T A u without forming the block matrices.
double mass_norm_sq(const TaylorHoodSpace& space, const Eigen::VectorXd& u);
double stiffness_norm_sq(const TaylorHoodSpace& space, const Eigen::VectorXd& u);
/// ||B u||_2.
double divergence_residual(const TaylorHoodSpace& space, const Eigen::VectorXd& u);

}  // namespace snslab
