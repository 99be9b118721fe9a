#include "snslab/fem/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <stdexcept>

#include "snslab/gmres.hpp"
#include "snslab/stats.hpp"

namespace snslab {
namespace {

using Triplet = Eigen::Triplet<double>;

double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

}  // namespace

SparseMatrix assemble_convection(const TaylorHoodSpace& space, const Eigen::VectorXd& w, bool skew) {
  const Tabulation& tab = space.assembly_rule();
  const auto& mesh = space.mesh();
  const QuadSamples ws = sample_state(space, tab, w);
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(mesh.tet_count()) * 100);
  Eigen::Matrix<double, 10, 10> local;
  for (int tet = 0; tet < mesh.tet_count(); ++tet) {
    const int t = PeriodicMesh::tet_type(tet);
    const int cube = PeriodicMesh::tet_cube(tet);
    const double vol = mesh.type(t).volume;
    local.setZero();
    for (std::size_t q = 0; q < tab.points(); ++q) {
      const std::size_t idx = sample_index(space, tab, t, q, cube);
      const Vec3& wv = ws.value[idx];
      const auto& wg = ws.grad[idx];
      const double half_div = skew ? 0.5 * (wg[0][0] + wg[1][1] + wg[2][2]) : 0.0;
      const double wt = vol * tab.rule.weights[q];
      for (int j = 0; j < 10; ++j) {
        const double adv = dot3(wv, tab.p2_grad[t][q][j]) + half_div * tab.p2[q][j];
        for (int i = 0; i < 10; ++i) local(i, j) += wt * adv * tab.p2[q][i];
      }
    }
    const auto d = space.local_dofs(tet);
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j) trip.emplace_back(d[i], d[j], local(i, j));
  }
  SparseMatrix c(space.scalar_dofs(), space.scalar_dofs());
  c.setFromTriplets(trip.begin(), trip.end());
  return c;
}

SaddlePointSolver::SaddlePointSolver(const TaylorHoodSpace& space, const SparseMatrix& ks) : space_(space) {
  const int S = space.scalar_dofs();
  const int P = space.pressure_dofs();
  if (ks.rows() != S || ks.cols() != S) throw std::invalid_argument("saddle point: velocity block has the wrong size");
  SparseMatrix k = ks;
  k.makeCompressed();
  lu_.compute(k);
  if (lu_.info() != Eigen::Success) throw std::runtime_error("saddle point: velocity block factorisation failed");
  const SparseMatrix& b = space.divergence();
  Eigen::MatrixXd schur = Eigen::MatrixXd::Zero(P, P);
  for (int c = 0; c < 3; ++c) {
    const SparseMatrix bc = b.middleCols(c * S, S);
    const Eigen::MatrixXd x = lu_.solve(Eigen::MatrixXd(bc.transpose()));
    schur += bc * x;
  }
  const auto& m = space.pressure_weights();
  schur += m * m.transpose();
  schur_.compute(schur);
}

Eigen::VectorXd SaddlePointSolver::solve_block(const Eigen::VectorXd& f) const {
  const int S = space_.scalar_dofs();
  Eigen::VectorXd u(3 * S);
  for (int c = 0; c < 3; ++c) u.segment(c * S, S) = lu_.solve(f.segment(c * S, S));
  return u;
}

void SaddlePointSolver::solve(const Eigen::VectorXd& rhs, Eigen::VectorXd& velocity, Eigen::VectorXd& pressure) const {
  solve(rhs, Eigen::VectorXd::Zero(space_.pressure_dofs()), velocity, pressure);
}

void SaddlePointSolver::solve(const Eigen::VectorXd& f, const Eigen::VectorXd& g, Eigen::VectorXd& velocity,
                              Eigen::VectorXd& pressure) const {
  if (f.size() != space_.velocity_dofs() || g.size() != space_.pressure_dofs())
    throw std::invalid_argument("saddle point: right-hand side size mismatch");
  const SparseMatrix& b = space_.divergence();
  pressure = schur_.solve(b * solve_block(f) - g);
  velocity = solve_block(f - b.transpose() * pressure);
  if (!velocity.allFinite() || !pressure.allFinite()) throw std::runtime_error("saddle point solve produced non-finite values");
}

FemError error_between(const TaylorHoodSpace& space, const QuadSamples& a, const QuadSamples& b) {
  const Tabulation& tab = space.accurate_rule();
  const auto& mesh = space.mesh();
  const bool grads = !a.grad.empty() && !b.grad.empty();
  double l2 = 0.0, h1 = 0.0;
  for (int t = 0; t < PeriodicMesh::kTypes; ++t) {
    const double vol = mesh.type(t).volume;
    for (std::size_t q = 0; q < tab.points(); ++q) {
      const double w = vol * tab.rule.weights[q];
      for (int cube = 0; cube < mesh.cube_count(); ++cube) {
        const std::size_t i = sample_index(space, tab, t, q, cube);
        for (int c = 0; c < 3; ++c) {
          const double d = a.value[i][c] - b.value[i][c];
          l2 += w * d * d;
          if (grads)
            for (int j = 0; j < 3; ++j) {
              const double g = a.grad[i][c][j] - b.grad[i][c][j];
              h1 += w * g * g;
            }
        }
      }
    }
  }
  // Some Grundmann-Moeller weights are negative; clamp rounding below zero.
  return {std::sqrt(std::max(l2, 0.0)), std::sqrt(std::max(h1, 0.0))};
}

FemError error_vs_spectral(const TaylorHoodSpace& space, const Eigen::VectorXd& velocity, const SpectralField& v) {
  const Tabulation& tab = space.accurate_rule();
  return error_between(space, sample_state(space, tab, velocity), sample_spectral(space, tab, v));
}

Projection project_l2_divfree(const TaylorHoodSpace& space, const QuadSamples& samples) {
  const Tabulation& tab = space.accurate_rule();
  const Eigen::VectorXd rhs = load_vector(space, tab, samples);
  SaddlePointSolver solver(space, space.scalar_mass());
  Projection out;
  out.state = zero_state(space);
  solver.solve(rhs, out.state.velocity, out.state.pressure);
  out.state.pressure.setZero();
  out.state.divergence_free = true;
  const FemError e = error_between(space, sample_state(space, tab, out.state.velocity), samples);
  out.l2_error = e.l2;
  out.h1_error = samples.grad.empty() ? 0.0 : e.h1;
  return out;
}

Projection project_l2_divfree(const TaylorHoodSpace& space, const SpectralField& v) {
  return project_l2_divfree(space, sample_spectral(space, space.accurate_rule(), v));
}

Projection project_l2_divfree(const TaylorHoodSpace& space, const PointFunction& f, const PointGradient& grad) {
  return project_l2_divfree(space, sample_function(space, space.accurate_rule(), f, grad));
}

namespace {

template <class Fn>
void for_each_pressure_sample(const TaylorHoodSpace& space, Fn&& fn) {
  const Tabulation& tab = space.accurate_rule();
  const auto& mesh = space.mesh();
  for (int tet = 0; tet < mesh.tet_count(); ++tet) {
    const int t = PeriodicMesh::tet_type(tet);
    const Vec3 o = mesh.cube_origin(PeriodicMesh::tet_cube(tet));
    const auto pv = mesh.tet_vertices(tet);
    const double vol = mesh.type(t).volume;
    for (std::size_t q = 0; q < tab.points(); ++q) {
      const Vec3 x{o[0] + tab.offset[t][q][0], o[1] + tab.offset[t][q][1], o[2] + tab.offset[t][q][2]};
      fn(pv, tab.p1[q], x, vol * tab.rule.weights[q]);
    }
  }
}

}  // namespace

Eigen::VectorXd project_pressure(const TaylorHoodSpace& space, const std::function<double(const Vec3&)>& f) {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(space.pressure_dofs());
  for_each_pressure_sample(space, [&](const std::array<int, 4>& pv, const std::array<double, 4>& l, const Vec3& x, double w) {
    const double v = f(x);
    for (int i = 0; i < 4; ++i) rhs[pv[i]] += w * v * l[i];
  });
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(space.pressure_mass());
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("pressure mass factorisation failed");
  return ldlt.solve(rhs);
}

double pressure_l2_error(const TaylorHoodSpace& space, const Eigen::VectorXd& p,
                         const std::function<double(const Vec3&)>& f) {
  double sum = 0.0;
  for_each_pressure_sample(space, [&](const std::array<int, 4>& pv, const std::array<double, 4>& l, const Vec3& x, double w) {
    double ph = 0.0;
    for (int i = 0; i < 4; ++i) ph += p[pv[i]] * l[i];
    const double d = ph - f(x);
    sum += w * d * d;
  });
  return std::sqrt(std::max(sum, 0.0));
}

FemDiffusion::FemDiffusion(const Diffusion& diffusion, const TaylorHoodSpace& space)
    : diffusion_(diffusion), space_(space) {
  const Tabulation& tab = space.accurate_rule();
  const auto& mesh = space.mesh();
  const std::size_t total = PeriodicMesh::kTypes * tab.points() * mesh.cube_count();
  weights_.assign(diffusion.basis().size(), std::vector<double>(total));
  for (int t = 0; t < PeriodicMesh::kTypes; ++t)
    for (std::size_t q = 0; q < tab.points(); ++q)
      for (int cube = 0; cube < mesh.cube_count(); ++cube) {
        const Vec3 o = mesh.cube_origin(cube);
        const Vec3 x{o[0] + tab.offset[t][q][0], o[1] + tab.offset[t][q][1], o[2] + tab.offset[t][q][2]};
        const std::size_t i = sample_index(space, tab, t, q, cube);
        for (std::size_t j = 0; j < weights_.size(); ++j) weights_[j][i] = diffusion.weight(static_cast<int>(j), x);
      }
}

Eigen::VectorXd FemDiffusion::load(const Eigen::VectorXd& velocity, std::span<const double> incr) const {
  if (incr.size() != weights_.size()) throw std::invalid_argument("noise increment count does not match the basis");
  const Tabulation& tab = space_.accurate_rule();
  QuadSamples s = sample_state(space_, tab, velocity);
  s.grad.clear();
  for (std::size_t i = 0; i < s.value.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < weights_.size(); ++j) sum += weights_[j][i] * incr[j];
    const Vec3 f = diffusion_.nonlinearity(s.value[i]);
    s.value[i] = {sum * f[0], sum * f[1], sum * f[2]};
  }
  return load_vector(space_, tab, s);
}

FemStepper::FemStepper(const TaylorHoodSpace& space, const StepConfig& config)
    : space_(space),
      config_(config),
      stokes_(space.scalar_mass() + (config.tau * config.mu) * space.scalar_stiffness()),
      preconditioner_(space, stokes_) {
  config.validate();
  if (config.variant != SchemeVariant::plain) throw std::invalid_argument("FEM stepping supports the plain scheme only");
}

FemState FemStepper::step(const FemState& u_prev, const Eigen::VectorXd& noise_load, int* iterations) const {
  if (!u_prev.divergence_free) throw std::invalid_argument("step_fem: previous state must be discretely divergence-free");
  const int S = space_.scalar_dofs();
  const int V = space_.velocity_dofs();
  const int P = space_.pressure_dofs();
  const SparseMatrix ks = stokes_ + config_.tau * assemble_convection(space_, u_prev.velocity);
  const SparseMatrix& b = space_.divergence();

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(V + P);
  if (noise_load.size() != 0) {
    if (noise_load.size() != V) throw std::invalid_argument("step_fem: noise load size mismatch");
    rhs.head(V) = noise_load;
  }
  for (int c = 0; c < 3; ++c) rhs.segment(c * S, S) += space_.scalar_mass() * u_prev.velocity.segment(c * S, S);

  auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    y.resize(V + P);
    for (int c = 0; c < 3; ++c) y.segment(c * S, S) = ks * x.segment(c * S, S);
    y.head(V) += b.transpose() * x.tail(P);
    y.tail(P) = b * x.head(V);
  };
  auto precondition = [&](const Eigen::VectorXd& r, Eigen::VectorXd& z) {
    Eigen::VectorXd u, p;
    preconditioner_.solve(r.head(V), r.tail(P), u, p);
    z.resize(V + P);
    z.head(V) = u;
    z.tail(P) = p;
  };
  Eigen::VectorXd x = Eigen::VectorXd::Zero(V + P);
  // The divergence constraint is checked in absolute terms, so solve tighter
  // than the spectral default.
  const double tol = std::min(config_.tolerance, 1e-12);
  const GmresResult res = gmres(apply, precondition, rhs, x, tol, config_.max_iterations);
  if (iterations) *iterations = res.iterations;
  if (!res.converged)
    throw SolverError("FEM step did not converge (relative residual " + std::to_string(res.relative_residual) + ")", -1);
  FemState out;
  out.velocity = x.head(V);
  out.pressure = x.tail(P);
  out.divergence_free = true;
  return out;
}

FemState step_fem(const TaylorHoodSpace& space, const FemState& u_prev, const Eigen::VectorXd& noise_load,
                  const StepConfig& config) {
  return FemStepper(space, config).step(u_prev, noise_load);
}

FemTrajectory run_fem_trajectory(const TaylorHoodSpace& space, const FemState& u0, const NoisePath& path,
                                 const StepConfig& config, const Diffusion& diffusion, int max_steps) {
  config.validate();
  if (path.modes() != static_cast<int>(diffusion.basis().size()))
    throw std::invalid_argument("noise path mode count does not match the diffusion basis");
  const FemDiffusion noise(diffusion, space);
  const FemStepper stepper(space, config);
  return run_fem_trajectory(stepper, noise, u0, path, max_steps);
}

FemTrajectory run_fem_trajectory(const FemStepper& stepper, const FemDiffusion& noise, const FemState& u0,
                                 const NoisePath& path, int max_steps) {
  const TaylorHoodSpace& space = stepper.space();
  int steps = std::min(stepper.config().steps, path.steps());
  if (max_steps >= 0) steps = std::min(steps, max_steps);
  FemTrajectory traj;
  traj.states.push_back(u0);
  traj.divergence_residual.push_back(divergence_residual(space, u0.velocity));
  for (int m = 1; m <= steps; ++m) {
    const FemState& prev = traj.states.back();
    const Eigen::VectorXd load = noise.is_zero() ? Eigen::VectorXd() : noise.load(prev.velocity, path.step(m - 1));
    int iters = 0;
    try {
      traj.states.push_back(stepper.step(prev, load, &iters));
    } catch (const SolverError& e) {
      throw SolverError(std::string(e.what()) + " at step " + std::to_string(m), m);
    }
    traj.iterations.push_back(iters);
    traj.divergence_residual.push_back(divergence_residual(space, traj.states.back().velocity));
  }
  return traj;
}

double infsup_constant(const TaylorHoodSpace& space, bool mean_constraint) {
  const int S = space.scalar_dofs();
  const int P = space.pressure_dofs();
  // Pin one DOF per component. B annihilates constants, so the pinned solve
  // differs from the mean-free one only by a constant and gives the same
  // energy x^T A x.
  SparseMatrix a = space.scalar_stiffness();
  a.prune([](Eigen::Index r, Eigen::Index c, double) { return r != 0 && c != 0; });
  a.coeffRef(0, 0) = 1.0;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("infsup: stiffness factorisation failed");

  const Eigen::MatrixXd b = Eigen::MatrixXd(space.divergence());
  Eigen::MatrixXd schur = Eigen::MatrixXd::Zero(P, P);
  for (int c = 0; c < 3; ++c) {
    Eigen::MatrixXd bt = b.block(0, c * S, P, S).transpose();
    bt.row(0).setZero();
    const Eigen::MatrixXd x = ldlt.solve(bt);
    schur += b.block(0, c * S, P, S) * x;
  }
  schur = 0.5 * (schur + schur.transpose()).eval();
  const Eigen::MatrixXd mp = Eigen::MatrixXd(space.pressure_mass());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(schur, mp, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("infsup: generalised eigensolve failed");
  const auto& ev = es.eigenvalues();
  // ev[0] belongs to the constant pressure, which B^T maps to zero.
  const double lambda = mean_constraint ? ev[1] : ev[0];
  return std::sqrt(std::max(lambda, 0.0));
}

ProjectionRates projection_error_rates(std::span<const int> levels) {
  if (levels.size() < 3) throw std::invalid_argument("projection_error_rates needs at least 3 mesh levels");
  ProjectionRates r;
  const PointFunction v = [](const Vec3& x) { return Vec3{0.0, std::sin(x[0]), 0.0}; };
  const PointGradient g = [](const Vec3& x) {
    std::array<Vec3, 3> d{};
    d[1][0] = std::cos(x[0]);
    return d;
  };
  const auto p = [](const Vec3& x) { return std::cos(x[0] + x[1]); };
  for (int n : levels) {
    const TaylorHoodSpace space(n);
    const Projection proj = project_l2_divfree(space, v, g);
    r.n.push_back(n);
    r.h.push_back(space.h());
    r.velocity_l2.push_back(proj.l2_error);
    r.velocity_h1.push_back(proj.h1_error);
    r.pressure_l2.push_back(pressure_l2_error(space, project_pressure(space, p), p));
  }
  r.slope_velocity_l2 = fit_loglog(r.h, r.velocity_l2).slope;
  r.slope_velocity_h1 = fit_loglog(r.h, r.velocity_h1).slope;
  r.slope_pressure_l2 = fit_loglog(r.h, r.pressure_l2).slope;
  return r;
}

}  // namespace snslab
