#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "snslab/pressure.hpp"
#include "snslab/stepper.hpp"

using namespace snslab;
using namespace snslab::oracle;

TEST_CASE("cutoff_zeta") {
  const double r = 3.0;
  CHECK(cutoff_zeta(0.5 * r, r) == 1.0);
  CHECK(cutoff_zeta(2.0 * r, r) == 0.0);
  CHECK(cutoff_zeta(1.5 * r, r) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(cutoff_zeta(0.0, r) == 1.0);
  double prev = 1.0;
  for (int i = 0; i <= 400; ++i) {
    const double z = cutoff_zeta(i * 0.01 * r, r);
    CHECK(z <= prev);
    CHECK(z >= 0.0);
    prev = z;
  }
  // C^2 at the seams: one-sided second differences vanish.
  const double h = 1e-4 * r;
  for (double x : {r, 2.0 * r}) {
    const double d2 = (cutoff_zeta(x + 2 * h, r) - 2 * cutoff_zeta(x + h, r) + cutoff_zeta(x, r)) / (h * h);
    CHECK(std::abs(d2) < 1e-2);
  }
}

TEST_CASE("step_semi_implicit examples") {
  StepConfig cfg;
  cfg.tau = 0.1;
  cfg.mu = 0.7;
  for (int n : {4, 8}) {
    const SpectralField zero(n);
    SpectralField z = zero;
    z.set_divergence_free(true);
    CHECK(max_abs_diff(step_semi_implicit(z, zero, cfg).u, zero) == 0.0);

    const double a = 1.3;
    const auto r = step_semi_implicit(shear_mode(n, a), zero, cfg);
    const SpectralField expected = (1.0 / (1.0 + cfg.mu * cfg.tau)) * shear_mode(n, a);
    CHECK(max_abs_diff(r.u, expected) < 1e-14);
    CHECK(max_abs_diff(r.u, dense_step(shear_mode(n, a), shear_mode(n, a), zero, cfg.mu, cfg.tau, 1.0)) < 1e-14);
  }
}

TEST_CASE("step agrees with a dense Galerkin solve") {
  std::mt19937_64 rng(11);
  StepConfig cfg;
  cfg.tau = 0.05;
  cfg.mu = 1.0;
  for (int n : {4, 8}) {
    for (int trial = 0; trial < 3; ++trial) {
      const SpectralField u = band_divfree(n, rng, 1.0 + trial);
      const SpectralField noise = random_field(n, rng, dealias_cutoff(n), 1.0, 0.3);
      const auto r = step_semi_implicit(u, noise, cfg);
      const SpectralField ref = dense_step(u, u, noise, cfg.mu, cfg.tau, 1.0);
      CHECK(max_abs_diff(r.u, ref) < 1e-9);
      CHECK(divergence_defect(r.u) < 1e-12);
      const double z = 0.37;
      CHECK(max_abs_diff(step_scaled(u, noise, cfg, z).u, dense_step(u, u, noise, cfg.mu, cfg.tau, z)) < 1e-9);
    }
  }
}

TEST_CASE("discrete energy identity, zero noise") {
  std::mt19937_64 rng(5);
  StepConfig cfg;
  cfg.tau = 0.02;
  cfg.mu = 0.5;
  for (int n : {8, 16}) {
    for (int trial = 0; trial < 5; ++trial) {
      const SpectralField u = random_divfree_field(n, rng, dealias_cutoff(n), 0.5, 2.0);
      const SpectralField v = step_semi_implicit(u, SpectralField(n), cfg).u;
      const double lhs = std::pow(sobolev_norm(v, 0), 2) + 2 * cfg.tau * cfg.mu * std::pow(seminorm(v, 1), 2);
      CHECK(lhs <= std::pow(sobolev_norm(u, 0), 2) + 1e-10);
      const double with_incr = lhs + std::pow(sobolev_norm(v - u, 0), 2);
      CHECK(with_incr == doctest::Approx(std::pow(sobolev_norm(u, 0), 2)).epsilon(1e-8));
    }
  }
}

TEST_CASE("step_truncated") {
  std::mt19937_64 rng(21);
  const int n = 8;
  StepConfig cfg;
  cfg.tau = 0.05;
  const SpectralField u = band_divfree(n, rng, 1.0);
  const SpectralField noise = random_field(n, rng, 2, 1.0, 0.2);
  const double h2 = sobolev_norm(u, 2);

  SUBCASE("below the radius it is the plain step") {
    cfg.radius = h2;
    CHECK(bit_equal(step_truncated(u, noise, cfg).u, step_semi_implicit(u, noise, cfg).u));
  }
  SUBCASE("beyond twice the radius it is a heat step") {
    cfg.radius = 0.5 * h2;
    const SpectralField out = step_truncated(u, noise, cfg).u;
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2)
        for (int i3 = 0; i3 < n; ++i3) {
          const double kk = std::pow(wavenumber(i1, n), 2) + std::pow(wavenumber(i2, n), 2) + std::pow(wavenumber(i3, n), 2);
          for (int c = 0; c < 3; ++c)
            CHECK(std::abs(out.at(c, i1, i2, i3) - u.at(c, i1, i2, i3) / (1.0 + cfg.tau * cfg.mu * kk)) < 1e-15);
        }
  }
  SUBCASE("in between the scale is the cutoff value") {
    cfg.radius = h2 / 1.4;
    const double z = cutoff_zeta(h2, cfg.radius);
    CHECK(z > 0.0);
    CHECK(z < 1.0);
    const SpectralField out = step_truncated(u, noise, cfg).u;
    CHECK(bit_equal(out, step_scaled(u, noise, cfg, z).u));
    CHECK(max_abs_diff(out, dense_step(u, u, noise, cfg.mu, cfg.tau, z)) < 1e-9);
  }
}

TEST_CASE("discrete_stop_index") {
  const std::vector<double> seq = {1, 2, 5, 3};
  CHECK(discrete_stop_index(seq, 4.0) == 2);
  CHECK(discrete_stop_index(seq, 10.0) == 3);
  CHECK(discrete_stop_index(seq, 1.0) == 0);
  CHECK(discrete_stop_index(seq, kNoTruncation) == 3);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> d(0.0, 10.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> s(12);
    for (auto& x : s) x = d(rng);
    double r1 = d(rng), r2 = d(rng);
    if (r1 > r2) std::swap(r1, r2);
    CHECK(discrete_stop_index(s, r1) <= discrete_stop_index(s, r2));
  }
}

TEST_CASE("run_trajectory") {
  const int n = 8;
  StepConfig cfg;
  cfg.tau = 1.0 / 16;
  cfg.steps = 16;
  cfg.mu = 1.0;
  Diffusion off({NoiseKind::multiplicative, 2.0, 0.0, 4}, n);
  const auto path = sample_path(1, 0, cfg.steps, cfg.tau, 4);

  SUBCASE("shear mode decays in closed form") {
    const double a = 0.8;
    const Trajectory t = run_trajectory(shear_mode(n, a), path, cfg, off);
    REQUIRE(t.steps() == cfg.steps);
    for (int m = 0; m <= cfg.steps; ++m) {
      const SpectralField e = (std::pow(1.0 + cfg.mu * cfg.tau, -m)) * shear_mode(n, a);
      CHECK(max_abs_diff(t.states[m], e) < 1e-14);
    }
    CHECK(t.stop_index == cfg.steps);
  }

  SUBCASE("zero noise: energy inequality and monotone L2") {
    std::mt19937_64 rng(8);
    const SpectralField u0 = random_divfree_field(n, rng, 2, 0.5, 3.0);
    const Trajectory t = run_trajectory(u0, path, cfg, off);
    double acc = 0.0;
    for (int m = 1; m <= t.steps(); ++m) {
      CHECK(t.norms[m][0] <= t.norms[m - 1][0] + 1e-12);
      acc += t.increment_l2[m] * t.increment_l2[m] + 2 * cfg.mu * cfg.tau * std::pow(t.seminorms[m][1], 2);
      CHECK(std::pow(t.norms[m][0], 2) + acc <= std::pow(t.norms[0][0], 2) + 1e-8);
    }
  }

  SUBCASE("noise: recorded norms, divergence and measurability") {
    std::mt19937_64 rng(9);
    Diffusion on({NoiseKind::multiplicative, 2.0, 0.5, 4}, n);
    const SpectralField u0 = random_divfree_field(n, rng, 2, 1.0, 1.0);
    const Trajectory t = run_trajectory(u0, path, cfg, on);
    for (int m = 0; m <= t.steps(); ++m) {
      CHECK(t.states[m].divergence_free());
      CHECK(divergence_defect(t.states[m]) < 1e-12);
      for (int k = 0; k < 3; ++k) CHECK(t.norms[m][k] == sobolev_norm(t.states[m], k));
    }
    for (int m : {1, 7, 16}) {
      const SpectralField again = step_semi_implicit(t.states[m - 1], on.apply(t.states[m - 1], path.step(m - 1)), cfg).u;
      CHECK(bit_equal(again, t.states[m]));
    }
  }

  SUBCASE("plain and truncated coincide up to the stop index") {
    std::mt19937_64 rng(10);
    Diffusion on({NoiseKind::multiplicative, 2.0, 0.5, 4}, n);
    const SpectralField u0 = random_divfree_field(n, rng, 2, 1.0, 1.0);
    StepConfig plain = cfg;
    const Trajectory ref = run_trajectory(u0, path, plain, on);
    // Pick R so that the stop happens mid-path.
    plain.radius = ref.norms[cfg.steps / 2][2];
    StepConfig trunc = plain;
    trunc.variant = SchemeVariant::truncated;
    const Trajectory a = run_trajectory(u0, path, plain, on);
    const Trajectory b = run_trajectory(u0, path, trunc, on);
    CHECK(a.stop_index == b.stop_index);
    for (int m = 0; m <= a.stop_index; ++m) CHECK(bit_equal(a.states[m], b.states[m]));
  }

  SUBCASE("max_steps and store_states") {
    TrajectoryOptions opts;
    opts.store_states = false;
    opts.max_steps = 5;
    const Trajectory t = run_trajectory(shear_mode(n, 1.0), path, cfg, off, opts);
    CHECK(t.steps() == 5);
    CHECK(t.states.empty());
  }

  SUBCASE("rejections") {
    std::mt19937_64 rng(1);
    const SpectralField bad = random_field(n, rng, 2, 1.0, 1.0);
    CHECK_THROWS_AS(run_trajectory(bad, path, cfg, off), std::invalid_argument);
    Diffusion wrong({NoiseKind::additive, 2.0, 0.5, 3}, n);
    CHECK_THROWS_AS(run_trajectory(shear_mode(n, 1.0), path, cfg, wrong), std::invalid_argument);
    StepConfig tiny = cfg;
    tiny.tolerance = 0.0;
    CHECK_THROWS_AS(run_trajectory(shear_mode(n, 1.0), path, tiny, off), std::invalid_argument);
  }
}

TEST_CASE("solver failure reports the step") {
  const int n = 8;
  StepConfig cfg;
  cfg.tau = 1.0 / 16;
  cfg.steps = 4;
  cfg.tolerance = 1e-14;
  cfg.max_iterations = 1;
  std::mt19937_64 rng(4);
  Diffusion on({NoiseKind::multiplicative, 2.0, 0.5, 4}, n);
  const auto path = sample_path(1, 0, cfg.steps, cfg.tau, 4);
  try {
    run_trajectory(random_divfree_field(n, rng, 2, 1.0, 5.0), path, cfg, on);
    FAIL("expected a solver failure");
  } catch (const SolverError& e) {
    CHECK(e.step() == 1);
  }
}

TEST_CASE("discrete_pressure") {
  const int n = 8;
  Diffusion mult({NoiseKind::multiplicative, 2.0, 0.5, 6}, n);
  Diffusion add({NoiseKind::additive, 2.0, 0.5, 6}, n);

  SpectralField zero(n);
  zero.set_divergence_free(true);
  const auto p0 = discrete_pressure(zero, zero, mult);
  for (auto c : p0.deterministic.coeffs()) CHECK(std::abs(c) == 0.0);
  for (const auto& f : p0.noise) CHECK(sobolev_norm(f, 0) == 0.0);
  const auto p0a = discrete_pressure(zero, zero, add);
  REQUIRE(p0a.noise.size() == 6);
  for (std::size_t j = 0; j < 6; ++j)
    CHECK(max_abs_diff(p0a.noise[j], gradient_part(add.mode_fields(zero)[j])) == 0.0);

  const SpectralField s = shear_mode(n, 1.0);
  const auto ps = discrete_pressure(s, s, mult);
  for (auto c : ps.deterministic.coeffs()) CHECK(std::abs(c) < 1e-15);

  std::mt19937_64 rng(17);
  const SpectralField u = random_divfree_field(n, rng, 2, 1.0, 1.0);
  const SpectralField v = random_divfree_field(n, rng, 2, 1.0, 1.0);
  const auto pr = discrete_pressure(u, v, mult);
  CHECK(std::abs(pr.deterministic.mean()) == 0.0);
  for (const auto& f : pr.noise) {
    // gradient fields: curl-free, Leray part zero
    CHECK(sobolev_norm(leray_project(f), 0) < 1e-14 * (1.0 + sobolev_norm(f, 0)));
  }
  CHECK_THROWS_AS(discrete_pressure(random_field(n, rng, 2, 1.0, 1.0), v, mult), std::invalid_argument);

  SUBCASE("noise pressure grows at most linearly") {
    // ||Phi^pi||_{L2(U;W^{1,2})} <= ||Phi(u)||_{L2(U;W^{1,2})} <= C (1 + ||u||_{W^{2,2}})
    double bound = 0.0;
    for (const auto& m : mult.basis()) {
      const double kn = std::sqrt(m.k[0] * m.k[0] + m.k[1] * m.k[1] + m.k[2] * m.k[2]);
      bound += std::pow(m.amplitude * (1.0 + kn), 2);
    }
    const double c = 0.5 * std::sqrt(bound) * std::sqrt(3.0 * kTorusVolume) * 2.0;
    for (int t = 0; t < 30; ++t) {
      const SpectralField w = random_divfree_field(n, rng, 2, 1.0, 0.1 * std::pow(1.25, t));
      const auto p = discrete_pressure(w, w, mult);
      const double np = noise_pressure_hs_norm(p.noise);
      CHECK(np <= mult.hs_norm(w, 1) * (1.0 + 1e-12));
      CHECK(np <= c * (1.0 + sobolev_norm(w, 2)));
    }
  }
}

TEST_CASE("moment_report") {
  const int n = 8;
  StepConfig cfg;
  cfg.tau = 1.0 / 16;
  cfg.steps = 16;
  Diffusion off({NoiseKind::multiplicative, 2.0, 0.0, 4}, n);
  std::mt19937_64 rng(12);
  const SpectralField u0 = random_divfree_field(n, rng, 2, 1.0, 2.0);
  const auto path = sample_path(3, 0, cfg.steps, cfg.tau, 4);
  const Trajectory t = run_trajectory(u0, path, cfg, off);

  SUBCASE("single path equals its own statistic") {
    const auto r = moment_report(std::span<const Trajectory>(&t, 1), 1);
    double peak = 0.0, sum = 0.0;
    for (int m = 1; m <= t.steps(); ++m) {
      peak = std::max(peak, t.seminorms[m][0] * t.seminorms[m][0]);
      sum += t.seminorms[m][1] * t.seminorms[m][1];
    }
    CHECK(r.paths == 1);
    CHECK(r.l2.mean == doctest::Approx(peak + cfg.tau * sum).epsilon(1e-14));
    CHECK(r.l2.standard_error == 0.0);
  }

  SUBCASE("zero noise is bounded by the initial energy") {
    const auto r = moment_report(std::span<const Trajectory>(&t, 1), 1);
    const double e0 = std::pow(sobolev_norm(u0, 0), 2);
    CHECK(r.l2.mean <= e0 * (1.0 + 1.0 / (2.0 * cfg.mu)) + 1e-10);
    const auto r2 = moment_report(std::span<const Trajectory>(&t, 1), 2);
    CHECK(r2.l2.mean <= e0 * e0 * (1.0 + 1.0 / (2.0 * cfg.mu)) + 1e-10);
  }

  SUBCASE("stable under halving the step with coupled noise") {
    Diffusion on({NoiseKind::multiplicative, 2.0, 0.5, 4}, n);
    StepConfig fine = cfg;
    fine.tau = cfg.tau / 2;
    fine.steps = cfg.steps * 2;
    // Smooth data: the first-step damping of rough modes would dominate the
    // max term otherwise.
    const SpectralField smooth = random_divfree_field(n, rng, 1, 1.0, 2.0);
    std::vector<Trajectory> coarse_t, fine_t;
    for (int p = 0; p < 8; ++p) {
      const auto fp = sample_path(99, p, fine.steps, fine.tau, 4);
      fine_t.push_back(run_trajectory(smooth, fp, fine, on, {false, -1}));
      coarse_t.push_back(run_trajectory(smooth, coarsen_path(fp, 2), cfg, on, {false, -1}));
    }
    const double a = moment_report(coarse_t, 1).l2.mean;
    const double b = moment_report(fine_t, 1).l2.mean;
    CHECK(std::abs(a - b) < 0.1 * b);
  }

  CHECK_THROWS_AS(moment_report(std::span<const Trajectory>(), 1), std::invalid_argument);
  CHECK_THROWS_AS(moment_report(std::span<const Trajectory>(&t, 1), 0), std::invalid_argument);
}
