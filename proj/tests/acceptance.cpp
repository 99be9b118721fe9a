// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass criterion numbers to run a subset.

#include <fmt/format.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "snslab/experiments/experiments.hpp"
#include "snslab/fem/solver.hpp"
#include "snslab/stats.hpp"

using namespace snslab;
using namespace snslab::oracle;

namespace {

struct Verdict {
  bool passed = false;
  std::string detail;
};

double rel_l2(const SpectralField& a, const SpectralField& b) {
  const double s = sobolev_norm(b, 0);
  return sobolev_norm(a - b, 0) / (s > 0.0 ? s : 1.0);
}

double rel_l2(const ScalarSpectralField& a, const ScalarSpectralField& b) {
  double d = 0.0, s = 0.0;
  for (std::size_t i = 0; i < a.coeffs().size(); ++i) {
    d += std::norm(a.coeffs()[i] - b.coeffs()[i]);
    s += std::norm(b.coeffs()[i]);
  }
  return std::sqrt(d / (s > 0.0 ? s : 1.0));
}

ScalarSpectralField random_scalar(int n, std::mt19937_64& rng) {
  // One component of a real random field is itself a real scalar field.
  const SpectralField g = random_field(n, rng, dealias_cutoff(n), 1.0, 1.0);
  ScalarSpectralField s(n);
  for (std::size_t i = 0; i < s.coeffs().size(); ++i) s.coeffs()[i] = g.component(0)[i];
  s.coeffs()[0] = Complex{};
  return s;
}

std::string band(double lo, double hi) { return fmt::format("[{}, {}]", lo, hi); }

bool in_band(double x, double lo, double hi) { return x >= lo && x <= hi; }

Verdict spectral_kernel() {
  const int n = 16;
  std::mt19937_64 rng(101);
  double idem = 0.0, annih = 0.0, inv = 0.0, parseval = 0.0;
  for (int t = 0; t < 8; ++t) {
    const SpectralField v = random_field(n, rng, n / 2, 1.0, 1.0 + t);
    const SpectralField pv = leray_project(v);
    idem = std::max(idem, rel_l2(leray_project(pv), pv));
    const ScalarSpectralField phi = random_scalar(n, rng);
    const SpectralField g = gradient(phi);
    annih = std::max(annih, sobolev_norm(leray_project(g), 0) / sobolev_norm(g, 0));
    inv = std::max({inv, rel_l2(laplacian(inv_laplacian(phi)), phi), rel_l2(inv_laplacian(laplacian(phi)), phi)});
    // Grid round trip both ways, and the energy identity between the two.
    const VectorGrid grid = to_grid(v);
    parseval = std::max(parseval, rel_l2(from_grid(grid), v));
    double e_grid = 0.0;
    for (int c = 0; c < 3; ++c)
      for (double x : grid.values[c]) e_grid += x * x;
    e_grid *= kTorusVolume / (static_cast<double>(n) * n * n);
    const double e_spec = std::pow(sobolev_norm(v, 0), 2);
    parseval = std::max(parseval, std::abs(e_grid - e_spec) / e_spec);
    const VectorGrid back = to_grid(from_grid(grid));
    double dg = 0.0, sg = 0.0;
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < grid.values[c].size(); ++i) {
        dg += std::pow(back.values[c][i] - grid.values[c][i], 2);
        sg += std::pow(grid.values[c][i], 2);
      }
    parseval = std::max(parseval, std::sqrt(dg / sg));
  }
  const double worst = std::max({idem, annih, inv, parseval});
  return {worst <= 1e-11, fmt::format("leray idempotence {:.2e}, gradient annihilation {:.2e}, inverse laplacian {:.2e}, "
                                      "parseval {:.2e} (limit 1e-11)",
                                      idem, annih, inv, parseval)};
}

Verdict energy_inequality() {
  const int n = 16;
  std::mt19937_64 rng(202);
  StepConfig sc;
  sc.tau = 1.0 / 64;
  sc.steps = 64;
  sc.tolerance = 1e-13;
  const DiffusionConfig off{NoiseKind::additive, 2.0, 0.0, 4};
  const Diffusion d(off, n);
  const NoisePath zero(sc.steps, 4, sc.tau, 0, 0, std::vector<double>(static_cast<std::size_t>(sc.steps) * 4, 0.0));
  double worst = -kNoTruncation;
  for (int p = 0; p < 16; ++p) {
    // L2 norms from 1 to 30, so convection matters on the larger ones.
    const double norm = std::pow(30.0, p / 15.0);
    const SpectralField u0 = band_divfree(n, rng, norm);
    const Trajectory tr = run_trajectory(u0, zero, sc, d);
    const double e0 = std::pow(sobolev_norm(u0, 0), 2);
    double inc = 0.0, grad = 0.0;
    for (int m = 1; m <= tr.steps(); ++m) {
      inc += std::pow(sobolev_norm(tr.states[m] - tr.states[m - 1], 0), 2);
      grad += std::pow(gradient_l2_norm(tr.states[m]), 2);
      const double lhs = std::pow(sobolev_norm(tr.states[m], 0), 2) + inc + 2.0 * sc.mu * sc.tau * grad;
      worst = std::max(worst, lhs - e0);
    }
  }
  return {worst <= 1e-8, fmt::format("max over 16 paths x 64 steps of lhs - |u0|^2 = {:.3e} (limit 1e-8)", worst)};
}

Verdict oracle_equivalence() {
  const int n = 4;
  std::mt19937_64 rng(303);
  StepConfig sc;
  sc.tau = 0.05;
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const SpectralField u = band_divfree(n, rng, 0.5 + 0.5 * t);
    const SpectralField noise = random_field(n, rng, dealias_cutoff(n), 1.0, 0.1 + 0.05 * t);
    const StepResult r = step_semi_implicit(u, noise, sc);
    worst = std::max(worst, max_abs_diff(r.u, dense_step(u, u, noise, sc.mu, sc.tau, 1.0)));
  }
  return {worst <= 1e-9, fmt::format("max coefficient difference vs dense Galerkin solve {:.3e} (limit 1e-9)", worst)};
}

std::string medians(const StudyResult& r) {
  std::string s;
  for (const auto& l : r.levels) s += fmt::format("{}{:.3g}", s.empty() ? "" : ", ", l.median);
  return s;
}

Verdict temporal_rate() {
  const RunConfig cfg = default_config(StudyKind::temporal);
  const StudyResult r = run_temporal_study(cfg);
  const bool ok = in_band(r.fit.slope, 0.7, 1.3);
  return {ok, fmt::format("slope {:.3f} +- {:.3f} (without coarsest {:.3f}), band {}; medians {}", r.fit.slope,
                          1.96 * r.fit.slope_se, r.fit.slope_fine, band(0.7, 1.3), medians(r))};
}

Verdict spatial_rate() {
  RunConfig noisy = default_config(StudyKind::spatial);
  RunConfig quiet = noisy;
  quiet.noise.gamma = 0.0;
  const StudyResult a = run_spatial_study(quiet);
  const StudyResult b = run_spatial_study(noisy);
  const std::vector<int> levels = {2, 3, 4, 6};
  const ProjectionRates pr = projection_error_rates(levels);
  const bool ok = in_band(a.fit.slope, 1.6, 2.4) && in_band(b.fit.slope, 1.6, 2.4) &&
                  in_band(pr.slope_velocity_l2, 1.7, 2.3) && in_band(pr.slope_velocity_h1, 0.8, 1.3) &&
                  in_band(pr.slope_pressure_l2, 1.7, 2.3);
  return {ok, fmt::format("E_h slope gamma=0 {:.3f} (medians {}), noisy {:.3f} (medians {}), band {}; projection "
                          "slopes L2 {:.3f} {}, H1 {:.3f} {}, pressure {:.3f} {}",
                          a.fit.slope, medians(a), b.fit.slope, medians(b), band(1.6, 2.4), pr.slope_velocity_l2,
                          band(1.7, 2.3), pr.slope_velocity_h1, band(0.8, 1.3), pr.slope_pressure_l2, band(1.7, 2.3))};
}

Verdict infsup_uniformity() {
  std::vector<double> beta;
  for (int n : {2, 3, 4, 6}) beta.push_back(infsup_constant(TaylorHoodSpace(n)));
  const double lo = *std::min_element(beta.begin(), beta.end());
  const double hi = *std::max_element(beta.begin(), beta.end());
  return {lo > 0.0 && lo / hi >= 0.5, fmt::format("beta(n=2,3,4,6) = {:.4f}, {:.4f}, {:.4f}, {:.4f}; min/max {:.3f} "
                                                  "(limit 0.5)",
                                                  beta[0], beta[1], beta[2], beta[3], lo / hi)};
}

std::string probabilities(const StoppingResult& r) {
  std::string s;
  for (const auto& c : r.cells) s += fmt::format("{}{:.3f}+-{:.3f}", s.empty() ? "" : ", ", c.probability, c.standard_error);
  return s;
}

Verdict stopping_trend() {
  const RunConfig cfg = default_config(StudyKind::stopping);
  const StoppingResult r = run_stopping_study(cfg);
  RunConfig low = cfg;
  low.R = sobolev_norm(initial_velocity(cfg, cfg.N_ref), 2);
  const StoppingResult l = run_stopping_study(low);
  const bool all_one = std::all_of(l.cells.begin(), l.cells.end(), [](const StoppingCell& c) { return c.probability == 1.0; });
  // Not part of the verdict: stronger noise and a radius just above the
  // initial norm, where the probabilities move away from 0.
  RunConfig mid = cfg;
  mid.noise.gamma = 2.0;
  mid.R = 1.1 * low.R;
  const StoppingResult m = run_stopping_study(mid);
  return {r.monotone && all_one,
          fmt::format("R=10 P = {} monotone {}; R=|u0|_W22={:.3f} P = {}; info gamma=2 R={:.3f} P = {} monotone {}",
                      probabilities(r), r.monotone ? "yes" : "no", low.R, probabilities(l), mid.R, probabilities(m),
                      m.monotone ? "yes" : "no")};
}

Verdict truncation_coherence() {
  const int n = 16;
  StepConfig plain;
  plain.tau = 1.0 / 64;
  plain.steps = 64;
  const RunConfig cfg = default_config(StudyKind::temporal);
  DiffusionConfig dc = cfg.noise;
  dc.gamma = 1.0;
  const Diffusion d(dc, n);
  const SpectralField u0 = initial_velocity(cfg, n);
  plain.radius = 1.1 * sobolev_norm(u0, 2);
  StepConfig trunc = plain;
  trunc.variant = SchemeVariant::truncated;
  int mismatched = 0, stopped = 0, diverged_after = 0;
  std::vector<int> stops;
  for (int p = 0; p < 32; ++p) {
    const NoisePath path = sample_path(cfg.seed, p, plain.steps, plain.tau, dc.modes);
    const Trajectory a = run_trajectory(u0, path, plain, d);
    const Trajectory b = run_trajectory(u0, path, trunc, d);
    bool same = a.stop_index == b.stop_index;
    for (int m = 0; same && m <= a.stop_index; ++m) same = bit_equal(a.states[m], b.states[m]);
    if (!same) ++mismatched;
    stops.push_back(a.stop_index);
    if (a.stop_index < plain.steps) {
      ++stopped;
      if (!bit_equal(a.states.back(), b.states.back())) ++diverged_after;
    }
  }
  std::sort(stops.begin(), stops.end());
  return {mismatched == 0,
          fmt::format("{} of 32 paths differ before j_R; j_R range [{}, {}], {} paths stop early, {} of them diverge "
                      "afterwards",
                      mismatched, stops.front(), stops.back(), stopped, diverged_after)};
}

void write_reference_path(const std::string& file) {
  std::ofstream out(file, std::ios::binary);
  write_path(out, sample_path(20240917, 7, 4096, 1.0 / 4096, 4));
  write_path(out, sample_path(20240917, 8, 64, 1.0 / 64, 16));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict noise_statistics() {
  const auto moments = [](const NoisePath& p) {
    const auto& inc = p.increments();
    double mean = 0.0;
    for (double x : inc) mean += x;
    mean /= static_cast<double>(inc.size());
    double var = 0.0;
    for (double x : inc) var += (x - mean) * (x - mean);
    return std::pair{mean, var / static_cast<double>(inc.size() - 1)};
  };
  const double tau = 1.0 / 4096;
  const NoisePath path = sample_path(1, 0, 4096, tau, 4);
  const auto [mean, var] = moments(path);
  const double count = static_cast<double>(path.increments().size());
  const double mean_units = std::abs(mean) / (std::sqrt(tau) / std::sqrt(count));
  const double var_rel = std::abs(var / tau - 1.0);
  const double var4 = moments(sample_path(1, 1, 4096, 4 * tau, 4)).second;
  const double scale_rel = std::abs(var4 / var / 4.0 - 1.0);
  bool ok = mean_units <= 4.0 && var_rel <= 0.05 && scale_rel <= 0.05;

  double coarsen = 0.0;
  for (int factor : {2, 4, 8, 64}) {
    const NoisePath c = coarsen_path(path, factor);
    for (int m = 0; m < c.steps(); ++m)
      for (int j = 0; j < 4; ++j) {
        double sum = 0.0;
        for (int k = 0; k < factor; ++k) sum += path.increment(factor * m + k, j);
        coarsen = std::max(coarsen, std::abs(c.increment(m, j) - sum));
      }
  }
  ok = ok && coarsen == 0.0;

  // Two fresh processes must write the same bytes, and match this one.
  const auto self = std::filesystem::read_symlink("/proc/self/exe");
  const auto dir = std::filesystem::temp_directory_path() / fmt::format("snslab_acceptance_{}", ::getpid());
  std::filesystem::create_directories(dir);
  bool identical = true;
  std::vector<std::string> bytes;
  for (int run = 0; run < 2; ++run) {
    const auto file = dir / fmt::format("path{}.bin", run);
    const std::string cmd = fmt::format("'{}' --write-path '{}'", self.string(), file.string());
    if (std::system(cmd.c_str()) != 0) identical = false;
    bytes.push_back(slurp(file));
  }
  write_reference_path((dir / "local.bin").string());
  bytes.push_back(slurp(dir / "local.bin"));
  identical = identical && !bytes[0].empty() && bytes[0] == bytes[1] && bytes[0] == bytes[2];
  std::filesystem::remove_all(dir);
  ok = ok && identical;

  return {ok, fmt::format("mean {:.2f} sigma/sqrt(n) (limit 4), variance rel {:.4f} (limit 0.05), 4x tau variance "
                          "rel {:.4f} (limit 0.05), coarsen max defect {:g}, cross-process bytes {} ({} bytes)",
                          mean_units, var_rel, scale_rel, coarsen, identical ? "identical" : "DIFFER", bytes[0].size())};
}

Verdict diffusion_proxies() {
  DiffusionConfig mult = default_config(StudyKind::invariants).noise;
  mult.kind = NoiseKind::multiplicative;
  std::vector<double> lip, bound, gconst, gslope;
  for (int n : {8, 16}) {
    const LipschitzProbe l = lipschitz_probe(mult, n, 1);
    lip.push_back(l.worst_ratio);
    bound.push_back(l.bound);
    const GrowthProbe g = growth_probe(mult, n, 1);
    gconst.push_back(g.constant);
    gslope.push_back(g.slope);
  }
  const auto spread = [](const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
  };
  const bool ok = lip[0] <= bound[0] && lip[1] <= bound[1] && gslope[0] <= 1.1 && gslope[1] <= 1.1 &&
                  spread(lip) <= 2.0 && spread(gconst) <= 2.0;
  return {ok, fmt::format("Lipschitz ratio {:.4f}/{:.4f} (N=8) {:.4f}/{:.4f} (N=16), spread {:.3f}; growth slope "
                          "{:.3f} (N=8) {:.3f} (N=16) (limit 1.1), constant spread {:.3f} (limit 2)",
                          lip[0], bound[0], lip[1], bound[1], spread(lip), gslope[0], gslope[1], spread(gconst))};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0: no runtime limit
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc == 3 && std::string(argv[1]) == "--write-path") {
    write_reference_path(argv[2]);
    return 0;
  }
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<Criterion> criteria = {
      {1, "spectral kernel exactness", 5, spectral_kernel},
      {2, "discrete energy inequality", 60, energy_inequality},
      {3, "oracle equivalence", 30, oracle_equivalence},
      {4, "temporal rate", 15 * 60, temporal_rate},
      {5, "spatial rate", 20 * 60, spatial_rate},
      {6, "inf-sup uniformity", 120, infsup_uniformity},
      {7, "stopping-time trend", 10 * 60, stopping_trend},
      {8, "truncation coherence", 5 * 60, truncation_coherence},
      {9, "noise statistics", 0, noise_statistics},
      {10, "diffusion assumption proxies", 120, diffusion_proxies},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.budget_s <= 0 || secs < c.budget_s;
    const bool ok = v.passed && in_time;
    if (!ok) ++failed;
    const std::string timing =
        c.budget_s > 0 ? fmt::format("{:.1f} s (limit {:g} s)", secs, c.budget_s) : fmt::format("{:.1f} s", secs);
    fmt::print("criterion {:2d} {:<6} {}: {}; {}\n", c.id, ok ? "PASS" : "FAIL", c.name, v.detail, timing);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
