#pragma once

// Semi-implicit Euler-Maruyama time stepping for the stochastic Navier-Stokes
// system in the divergence-free Fourier-Galerkin space.
//
// One step finds u_m in the retained band such that, for all solenoidal test
// functions phi in the band,
//
//   <u_m, phi> + tau mu <grad u_m, grad phi> + z tau <(u_{m-1}.grad) u_m, phi>
//       = <u_{m-1}, phi> + z <Phi(u_{m-1}) Delta_m W, phi>,
//
// with z = 1 for the plain scheme and z = zeta_R(||u_{m-1}||_{W^{2,2}}) for
// the truncated scheme. Convection is linearised around u_{m-1}, so every step
// is a linear solve.

#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "snslab/noise.hpp"
#include "snslab/spectral.hpp"

namespace snslab {

enum class SchemeVariant { plain, truncated };

inline constexpr double kNoTruncation = std::numeric_limits<double>::infinity();

struct StepConfig {
  double mu = 1.0;
  double tau = 1.0 / 16.0;
  int steps = 16;
  double radius = kNoTruncation;  // R; infinity disables stopping/truncation
  SchemeVariant variant = SchemeVariant::plain;
  double tolerance = 1e-10;
  int max_iterations = 200;

  double horizon() const { return tau * steps; }
  void validate() const;
};

/// A linear solve did not reach the requested tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, int step) : std::runtime_error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Smooth cutoff: 1 on [0,R], 0 on [2R,inf), quintic smoothstep in between.
double cutoff_zeta(double x, double radius);

struct StepResult {
  SpectralField u;
  int iterations = 0;
  double residual = 0.0;
};

/// Plain scheme step. `noise` is Phi(u_prev) Delta_m W as a general field.
StepResult step_semi_implicit(const SpectralField& u_prev, const SpectralField& noise, const StepConfig& config);
/// Truncated scheme step: convection and noise scaled by zeta_R(||u_prev||_2).
StepResult step_truncated(const SpectralField& u_prev, const SpectralField& noise, const StepConfig& config);
/// Step with an explicit scale on convection and noise.
StepResult step_scaled(const SpectralField& u_prev, const SpectralField& noise, const StepConfig& config, double scale);

/// Smallest m with max_{n<=m} norms[n] >= R; norms.size()-1 if never reached.
int discrete_stop_index(std::span<const double> norms, double radius);

/// ||grad^s v||_{L^2} for s in 0..3.
double seminorm(const SpectralField& v, int s);

struct Trajectory {
  std::vector<SpectralField> states;                 // u_0..u_M (empty when not stored)
  std::vector<std::array<double, 3>> norms;          // ||u_m||_{W^{k,2}}, k = 0,1,2
  std::vector<std::array<double, 4>> seminorms;      // ||grad^s u_m||, s = 0..3
  std::vector<double> increment_l2;                  // ||u_m - u_{m-1}||, [0] = 0
  std::vector<double> increment_h1;                  // ||grad(u_m - u_{m-1})||, [0] = 0
  std::vector<int> iterations;                       // solver iterations, [0] = 0
  int stop_index = 0;                                // j_R
  double tau = 0.0;

  int steps() const { return static_cast<int>(norms.size()) - 1; }
  std::vector<double> h2_norms() const;
};

struct TrajectoryOptions {
  bool store_states = true;
  /// Stop after this many steps (-1: run the whole path).
  int max_steps = -1;
};

/// Runs the configured scheme along the noise path; step m uses
/// Phi(u_{m-1}) and the m-th increment only.
Trajectory run_trajectory(const SpectralField& u0, const NoisePath& path, const StepConfig& config,
                          const Diffusion& diffusion, TrajectoryOptions options = {});

struct DiscretePressure {
  ScalarSpectralField deterministic;       // -Delta^{-1} div div (u_m (x) u_{m-1})
  std::vector<SpectralField> noise;        // -grad Delta^{-1} div Phi(u_{m-1}) e_j
};

DiscretePressure discrete_pressure(const SpectralField& u_m, const SpectralField& u_prev, const Diffusion& diffusion);

struct Estimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

struct MomentReport {
  int paths = 0;
  int q = 1;
  Estimate l2;         // max ||u_m||^{2^q} + tau sum ||u_m||^{2^q-2} ||grad u_m||^2
  Estimate h1;         // same one derivative higher, up to j_R
  Estimate h2;         // same two derivatives higher, up to j_R
  Estimate increments; // (sum_{m<=j_R} ||grad(u_m - u_{m-1})||^2)^q
};

MomentReport moment_report(std::span<const Trajectory> trajectories, int q);

}  // namespace snslab
