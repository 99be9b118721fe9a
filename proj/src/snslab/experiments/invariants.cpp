#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "snslab/experiments/experiments.hpp"
#include "snslab/fem/solver.hpp"

namespace snslab {

namespace {

class Suite {
 public:
  explicit Suite(double override_tol) : override_(override_tol) {}

  // Defect-type check: passes when value <= tol (or the override).
  void at_most(const std::string& name, double value, double tol) {
    const double limit = override_ > 0.0 ? override_ : tol;
    checks_.push_back({name, value, limit, value <= limit});
  }
  // Band or bound check that the tolerance override does not touch.
  void at_least(const std::string& name, double value, double limit) {
    checks_.push_back({name, value, limit, value >= limit});
  }
  void bound(const std::string& name, double value, double limit) {
    checks_.push_back({name, value, limit, value <= limit});
  }

  std::vector<CheckResult> take() { return std::move(checks_); }

 private:
  double override_;
  std::vector<CheckResult> checks_;
};

double rel(const SpectralField& a, const SpectralField& b) {
  const double d = sobolev_norm(a - b, 0);
  const double s = sobolev_norm(b, 0);
  return s > 0.0 ? d / s : d;
}

std::uint64_t bit_mismatches(const SpectralField& a, const SpectralField& b) {
  std::uint64_t bad = 0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < a.modes(); ++i) {
      const Complex x = a.component(c)[i], y = b.component(c)[i];
      if (std::bit_cast<std::uint64_t>(x.real()) != std::bit_cast<std::uint64_t>(y.real()) ||
          std::bit_cast<std::uint64_t>(x.imag()) != std::bit_cast<std::uint64_t>(y.imag()))
        ++bad;
    }
  return bad;
}

// A fixed solenoidal field built without any random numbers: a shear layer
// plus a k = (1,1,0) and a k = (0,1,2) mode.
SpectralField deterministic_field(int n, double scale) {
  SpectralField f = shear_mode(n, 1.0);
  f.at(2, 1, 1, 0) = Complex{0.3, -0.2};
  f.at(2, n - 1, n - 1, 0) = Complex{0.3, 0.2};
  f.at(0, 0, 1, 2) = Complex{-0.1, 0.25};
  f.at(0, 0, n - 1, n - 2) = Complex{-0.1, -0.25};
  f *= scale / sobolev_norm(f, 0);
  f.set_divergence_free(true);
  return f;
}

void spectral_checks(Suite& s, std::mt19937_64& rng) {
  const int n = 16;
  const SpectralField v = random_field(n, rng, dealias_cutoff(n), 1.0, 1.0);
  const SpectralField pv = leray_project(v);
  s.at_most("leray_idempotence", rel(leray_project(pv), pv), 1e-11);
  ScalarSpectralField phi(n);
  {
    const SpectralField g = random_field(n, rng, dealias_cutoff(n), 1.0, 1.0);
    for (std::size_t i = 0; i < phi.coeffs().size(); ++i) phi.coeffs()[i] = g.component(0)[i];
    phi.coeffs()[0] = Complex{};
  }
  const SpectralField grad = gradient(phi);
  s.at_most("leray_gradient_annihilation", sobolev_norm(leray_project(grad), 0) / sobolev_norm(grad, 0), 1e-11);
  const ScalarSpectralField back1 = laplacian(inv_laplacian(phi));
  const ScalarSpectralField back2 = inv_laplacian(laplacian(phi));
  double e1 = 0.0, e2 = 0.0;
  for (std::size_t i = 0; i < phi.coeffs().size(); ++i) {
    e1 += std::norm(back1.coeffs()[i] - phi.coeffs()[i]);
    e2 += std::norm(back2.coeffs()[i] - phi.coeffs()[i]);
  }
  const double pn = sobolev_norm(phi, 0) / std::sqrt(kTorusVolume);
  s.at_most("inverse_laplacian_two_sided", std::sqrt(std::max(e1, e2)) / pn, 1e-11);
  s.at_most("parseval_round_trip", rel(from_grid(to_grid(v)), v), 1e-11);

  const SpectralField a = random_divfree_field(n, rng, dealias_cutoff(n), 1.0, 1.0);
  const SpectralField b = random_divfree_field(n, rng, dealias_cutoff(n), 1.0, 1.0);
  const double skew = std::abs(l2_inner(convect(a, b), b)) / (sobolev_norm(a, 0) * gradient_l2_norm(b) * sobolev_norm(b, 0));
  s.at_most("convection_skew_symmetry", skew, 1e-12);
  s.at_most("divergence_defect_of_projection", divergence_defect(pv), 1e-10);
}

void stepper_checks_deterministic(Suite& s, const RunConfig& cfg) {
  // No noise anywhere in here.
  const int n = 16;
  StepConfig sc;
  sc.mu = cfg.mu;
  sc.tau = 1.0 / 64;
  sc.steps = 64;
  // The energy identity holds for the exact discrete solution; keep the
  // solver residual well below the 1e-8 slack at this amplitude.
  sc.tolerance = std::min(cfg.solver_tol, 1e-13);
  const DiffusionConfig off{NoiseKind::additive, 2.0, 0.0, 4};
  const Diffusion d(off, n);
  const NoisePath zero(sc.steps, 4, sc.tau, 0, 0, std::vector<double>(static_cast<std::size_t>(sc.steps) * 4, 0.0));
  const SpectralField u0 = deterministic_field(n, 30.0);
  const Trajectory tr = run_trajectory(u0, zero, sc, d);
  const double e0 = std::pow(tr.seminorms[0][0], 2);
  double sum_inc = 0.0, sum_grad = 0.0, worst = -kNoTruncation, worst_div = 0.0;
  for (int m = 1; m <= tr.steps(); ++m) {
    sum_inc += std::pow(tr.increment_l2[m], 2);
    sum_grad += std::pow(tr.seminorms[m][1], 2);
    const double lhs = std::pow(tr.seminorms[m][0], 2) + sum_inc + 2 * sc.mu * sc.tau * sum_grad;
    worst = std::max(worst, lhs - e0);
    worst_div = std::max(worst_div, divergence_defect(tr.states[m]));
  }
  s.at_most("energy_inequality_gamma0", worst, 1e-8);
  s.at_most("stepper_divergence_free", worst_div, 1e-10);

  double max_l2 = 0.0;
  for (int m = 0; m <= tr.steps(); ++m) max_l2 = std::max(max_l2, std::pow(tr.seminorms[m][0], 2));
  const double moment = max_l2 + sc.tau * sum_grad;
  s.bound("moment_bound_gamma0", moment / e0, 1.0 + 1.0 / (2.0 * sc.mu));

  // Truncated scheme with a radius crossed mid-run: identical up to j_R.
  StepConfig tc = sc;
  tc.radius = 0.5 * (tr.norms[0][2] + tr.norms.back()[2]);
  tc.variant = SchemeVariant::truncated;
  StepConfig pc = tc;
  pc.variant = SchemeVariant::plain;
  const Trajectory a = run_trajectory(u0, zero, pc, d);
  const Trajectory b = run_trajectory(u0, zero, tc, d);
  std::uint64_t bad = a.stop_index == b.stop_index ? 0 : 1;
  for (int m = 0; m <= std::min(a.stop_index, b.stop_index); ++m) bad += bit_mismatches(a.states[m], b.states[m]);
  s.at_most("truncation_coherence_gamma0", static_cast<double>(bad), 0.0);
}

void fem_checks_deterministic(Suite& s, const RunConfig& cfg) {
  const TaylorHoodSpace space(2);
  StepConfig sc;
  sc.mu = cfg.mu;
  sc.tau = 1.0 / 16;
  sc.steps = 4;
  sc.tolerance = cfg.solver_tol;
  const SpectralField v = deterministic_field(8, 10.0);
  FemState u = project_l2_divfree(space, v).state;
  const FemStepper stepper(space, sc);
  double worst = -kNoTruncation, worst_div = 0.0;
  for (int m = 0; m < sc.steps; ++m) {
    const FemState next = stepper.step(u, Eigen::VectorXd());
    const double lhs = mass_norm_sq(space, next.velocity) + 2 * sc.tau * sc.mu * stiffness_norm_sq(space, next.velocity);
    worst = std::max(worst, lhs - mass_norm_sq(space, u.velocity));
    worst_div = std::max(worst_div, divergence_residual(space, next.velocity) / next.velocity.norm());
    u = next;
  }
  s.at_most("fem_energy_inequality_gamma0", worst, 1e-8);
  s.at_most("fem_divergence_constraint", worst_div, 1e-9);
}

void fem_checks(Suite& s, std::mt19937_64& rng) {
  const TaylorHoodSpace space(2);
  const auto& tab = space.accurate_rule();
  const SpectralField v = random_divfree_field(8, rng, 2, 1.0, 1.0);
  const Projection p = project_l2_divfree(space, v);
  const Eigen::VectorXd& u = p.state.velocity;
  const Projection again = project_l2_divfree(space, sample_state(space, tab, u));
  s.at_most("projection_idempotence", (again.state.velocity - u).norm() / u.norm(), 1e-10);
  const Eigen::VectorXd lv = load_vector(space, tab, sample_spectral(space, tab, v));
  const SparseMatrix M = space.velocity_mass();
  double orth = 0.0;
  for (int t = 0; t < 4; ++t) {
    const Eigen::VectorXd w = project_l2_divfree(space, random_divfree_field(8, rng, 2, 1.0, 1.0)).state.velocity;
    orth = std::max(orth, std::abs(lv.dot(w) - u.dot(M * w)) / std::sqrt(w.dot(M * w)));
  }
  s.at_most("projection_m_orthogonality", orth, 1e-10);

  std::vector<double> beta, stab;
  for (int n : {2, 3, 4}) {
    const TaylorHoodSpace sp(n);
    beta.push_back(infsup_constant(sp));
    std::mt19937_64 local(7);
    double worst = 0.0;
    for (int t = 0; t < 3; ++t) {
      const SpectralField f = random_divfree_field(8, local, 2, 1.0, 1.0);
      const Eigen::VectorXd x = project_l2_divfree(sp, f).state.velocity;
      worst = std::max(worst, std::sqrt(mass_norm_sq(sp, x) + stiffness_norm_sq(sp, x)) / sobolev_norm(f, 1));
    }
    stab.push_back(worst);
  }
  s.at_least("infsup_min", *std::min_element(beta.begin(), beta.end()), 1e-3);
  s.at_least("infsup_min_over_max", *std::min_element(beta.begin(), beta.end()) / *std::max_element(beta.begin(), beta.end()),
             0.5);
  s.bound("projection_h1_stability_spread",
          *std::max_element(stab.begin(), stab.end()) / *std::min_element(stab.begin(), stab.end()), 2.0);
}

void noise_checks(Suite& s, const RunConfig& cfg) {
  const double tau = 1.0 / 4096;
  const auto path = sample_path(cfg.seed, 0, 4096, tau, 4);
  const auto& inc = path.increments();
  double mean = 0.0;
  for (double x : inc) mean += x;
  mean /= static_cast<double>(inc.size());
  double var = 0.0;
  for (double x : inc) var += (x - mean) * (x - mean);
  var /= static_cast<double>(inc.size() - 1);
  s.bound("increment_mean_in_4_sigma", std::abs(mean) / (4.0 * std::sqrt(tau / static_cast<double>(inc.size()))), 1.0);
  s.bound("increment_variance_rel", std::abs(var / tau - 1.0), 0.05);

  const auto again = sample_path(cfg.seed, 0, 4096, tau, 4);
  std::uint64_t bad = 0;
  for (std::size_t i = 0; i < inc.size(); ++i)
    if (std::bit_cast<std::uint64_t>(inc[i]) != std::bit_cast<std::uint64_t>(again.increments()[i])) ++bad;
  s.at_most("path_determinism", static_cast<double>(bad), 0.0);

  const auto coarse = coarsen_path(path, 4);
  double worst = 0.0;
  for (int m = 0; m < coarse.steps(); ++m)
    for (int j = 0; j < 4; ++j) {
      double sum = 0.0;
      for (int k = 0; k < 4; ++k) sum += path.increment(4 * m + k, j);
      worst = std::max(worst, std::abs(coarse.increment(m, j) - sum));
    }
  s.at_most("coarsen_sums_exact", worst, 0.0);
}

void diffusion_checks(Suite& s, const RunConfig& cfg) {
  DiffusionConfig mult = cfg.noise;
  mult.kind = NoiseKind::multiplicative;
  if (mult.gamma == 0.0) mult.gamma = 0.5;
  std::vector<double> lip, growth;
  for (int n : {8, 16}) {
    const auto l = lipschitz_probe(mult, n, cfg.seed);
    s.bound("lipschitz_ratio_over_bound_N" + std::to_string(n), l.worst_ratio / l.bound, 1.0);
    lip.push_back(l.worst_ratio);
    const auto g = growth_probe(mult, n, cfg.seed);
    s.bound("linear_growth_slope_N" + std::to_string(n), g.slope, 1.1);
    growth.push_back(g.constant);
  }
  s.bound("lipschitz_resolution_spread", std::max(lip[0], lip[1]) / std::min(lip[0], lip[1]), 2.0);
  s.bound("growth_constant_resolution_spread", std::max(growth[0], growth[1]) / std::min(growth[0], growth[1]), 2.0);
}

}  // namespace

bool InvariantReport::passed() const {
  if (deterministic_draws != 0) return false;
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

InvariantReport run_invariant_suite(const RunConfig& cfg) {
  cfg.validate();
  Suite suite(cfg.check_tol);
  InvariantReport report;

  const std::uint64_t before = normal_draw_count();
  stepper_checks_deterministic(suite, cfg);
  fem_checks_deterministic(suite, cfg);
  report.deterministic_draws = normal_draw_count() - before;

  std::mt19937_64 rng(cfg.seed);
  spectral_checks(suite, rng);
  fem_checks(suite, rng);
  noise_checks(suite, cfg);
  diffusion_checks(suite, cfg);
  report.checks = suite.take();
  report.checks.push_back({"gamma0_normal_draws", static_cast<double>(report.deterministic_draws), 0.0,
                           report.deterministic_draws == 0});
  return report;
}

}  // namespace snslab
