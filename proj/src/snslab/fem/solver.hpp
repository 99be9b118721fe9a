#pragma once

// Saddle-point solves on the Taylor-Hood space: discretely divergence-free
// L2 projection, the fully discrete semi-implicit step, the discrete inf-sup
// constant and error functionals against spectral fields.

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <memory>
#include <span>
#include <vector>

#include "snslab/fem/space.hpp"
#include "snslab/noise.hpp"
#include "snslab/stepper.hpp"

namespace snslab {

/// Scalar block of the convection form
///   c(w; u, phi) = int (w.grad) u . phi + (1/2)(div w) u . phi
/// (the skew part is dropped when skew == false). The velocity operator is
/// block_diagonal() of the result.
SparseMatrix assemble_convection(const TaylorHoodSpace& space, const Eigen::VectorXd& w, bool skew = true);

/// Solves K u + B^T p = f, B u = g, m^T p = 0 for a velocity block
/// K = I_3 (x) K_s. The pressure comes from the dense Schur complement
/// B K^{-1} B^T + m m^T (the rank-one term fixes the mean).
class SaddlePointSolver {
 public:
  SaddlePointSolver(const TaylorHoodSpace& space, const SparseMatrix& scalar_block);
  void solve(const Eigen::VectorXd& rhs, Eigen::VectorXd& velocity, Eigen::VectorXd& pressure) const;
  /// General right-hand side; g must be orthogonal to the constants.
  void solve(const Eigen::VectorXd& f, const Eigen::VectorXd& g, Eigen::VectorXd& velocity,
             Eigen::VectorXd& pressure) const;

 private:
  Eigen::VectorXd solve_block(const Eigen::VectorXd& f) const;

  const TaylorHoodSpace& space_;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  Eigen::PartialPivLU<Eigen::MatrixXd> schur_;
};

struct Projection {
  FemState state;
  double l2_error = 0.0;  // ||v - Pi_h v||, from the samples
  double h1_error = 0.0;  // ||grad(v - Pi_h v)||, when the samples carry gradients
};

/// Pi_h onto the discretely divergence-free subspace. `samples` must be taken
/// on space.accurate_rule().
Projection project_l2_divfree(const TaylorHoodSpace& space, const QuadSamples& samples);
Projection project_l2_divfree(const TaylorHoodSpace& space, const SpectralField& v);
Projection project_l2_divfree(const TaylorHoodSpace& space, const PointFunction& f, const PointGradient& grad = {});

/// P1 L2 projection of a scalar function.
Eigen::VectorXd project_pressure(const TaylorHoodSpace& space, const std::function<double(const Vec3&)>& f);
double pressure_l2_error(const TaylorHoodSpace& space, const Eigen::VectorXd& p,
                         const std::function<double(const Vec3&)>& f);

/// Phi(u_h) evaluated on the FEM iterate at quadrature points.
class FemDiffusion {
 public:
  FemDiffusion(const Diffusion& diffusion, const TaylorHoodSpace& space);
  /// int Phi(u_h) Delta W . phi_i.
  Eigen::VectorXd load(const Eigen::VectorXd& velocity, std::span<const double> incr) const;
  bool is_zero() const { return diffusion_.is_zero(); }

 private:
  const Diffusion& diffusion_;
  const TaylorHoodSpace& space_;
  std::vector<std::vector<double>> weights_;  // [j][sample]
};

/// One step of
///   (M + tau mu A + tau C(u_prev)) u + B^T p = M u_prev + noise_load,  B u = 0.
/// The Stokes part K0 = M + tau mu A is factorised once; each step runs GMRES
/// on the full saddle system preconditioned by the exact K0 solve.
class FemStepper {
 public:
  FemStepper(const TaylorHoodSpace& space, const StepConfig& config);
  FemState step(const FemState& u_prev, const Eigen::VectorXd& noise_load, int* iterations = nullptr) const;
  const TaylorHoodSpace& space() const { return space_; }
  const StepConfig& config() const { return config_; }

 private:
  const TaylorHoodSpace& space_;
  StepConfig config_;
  SparseMatrix stokes_;  // scalar block of K0
  SaddlePointSolver preconditioner_;
};

FemState step_fem(const TaylorHoodSpace& space, const FemState& u_prev, const Eigen::VectorXd& noise_load,
                  const StepConfig& config);

struct FemTrajectory {
  std::vector<FemState> states;
  std::vector<double> divergence_residual;
  std::vector<int> iterations;  // per step, [0] is step 1
};

FemTrajectory run_fem_trajectory(const TaylorHoodSpace& space, const FemState& u0, const NoisePath& path,
                                 const StepConfig& config, const Diffusion& diffusion, int max_steps = -1);
/// Same with a prebuilt stepper and noise operator, shared across paths.
FemTrajectory run_fem_trajectory(const FemStepper& stepper, const FemDiffusion& noise, const FemState& u0,
                                 const NoisePath& path, int max_steps = -1);

struct FemError {
  double l2 = 0.0;
  double h1 = 0.0;  // gradient part only
};

FemError error_vs_spectral(const TaylorHoodSpace& space, const Eigen::VectorXd& velocity, const SpectralField& v);
FemError error_between(const TaylorHoodSpace& space, const QuadSamples& a, const QuadSamples& b);

/// Smallest positive generalised eigenvalue root of B A^{-1} B^T p = lambda Mp p,
/// with A the velocity stiffness on mean-free velocities. With
/// mean_constraint == false the constant pressure mode is kept and the result
/// is the (vanishing) smallest value.
double infsup_constant(const TaylorHoodSpace& space, bool mean_constraint = true);

struct ProjectionRates {
  std::vector<int> n;
  std::vector<double> h, velocity_l2, velocity_h1, pressure_l2;
  double slope_velocity_l2 = 0.0, slope_velocity_h1 = 0.0, slope_pressure_l2 = 0.0;
};

/// Projection errors of sin(x1) e2 (velocity) and cos(x1 + x2) (pressure).
ProjectionRates projection_error_rates(std::span<const int> levels);

}  // namespace snslab
