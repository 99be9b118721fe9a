#include <algorithm>
#include <cmath>
#include <memory>

#include "snslab/experiments/experiments.hpp"
#include "snslab/fem/solver.hpp"
#include "snslab/stats.hpp"

namespace snslab {

namespace {

NoisePath zero_path(int steps, double tau, int modes) {
  return NoisePath(steps, modes, tau, 0, 0, std::vector<double>(static_cast<std::size_t>(steps) * modes, 0.0));
}

StepConfig step_config(const RunConfig& cfg, double tau, double radius) {
  StepConfig sc;
  sc.mu = cfg.mu;
  sc.tau = tau;
  sc.steps = cfg.steps(tau);
  sc.radius = radius;
  sc.tolerance = cfg.solver_tol;
  return sc;
}

void append_trajectory(std::vector<TrajectoryRow>& rows, int path, const Trajectory& tr, double radius) {
  const auto h2 = tr.h2_norms();
  const bool reached = *std::max_element(h2.begin(), h2.end()) >= radius;
  for (int m = 0; m <= tr.steps(); ++m) {
    TrajectoryRow r;
    r.path = path;
    r.m = m;
    r.t = m * tr.tau;
    r.norm_l2 = tr.norms[m][0];
    r.norm_h1 = tr.norms[m][1];
    r.norm_h2 = tr.norms[m][2];
    r.inc_h1 = tr.increment_h1[m];
    r.stopped = reached && m >= tr.stop_index;
    r.solver_iters = tr.iterations[m];
    rows.push_back(r);
  }
}

// Marks exceedances, builds per-level summaries and fits log(median) against
// log(step) by weighted least squares. The weight of a level is the inverse
// variance of its log-median, estimated from the MAD.
void summarise(StudyResult& res, int levels, double xi_cfg, double exponent, const std::vector<int>& mesh_n,
               const std::vector<bool>& fit_level) {
  std::vector<std::vector<double>> per(levels);
  std::vector<double> step(levels, 0.0);
  for (const auto& r : res.rows) {
    per[r.level].push_back(r.error());
    step[r.level] = r.step;
  }
  res.exponent = exponent;
  res.xi = xi_cfg > 0.0 ? xi_cfg : (per[0].empty() ? 0.0 : median(per[0]) / std::pow(step[0], exponent));
  for (auto& r : res.rows) r.exceeds = r.error() > res.xi * std::pow(r.step, exponent);

  std::vector<double> x, y, w;
  bool unit = false;
  for (int l = 0; l < levels; ++l) {
    LevelSummary s;
    s.level = l;
    s.step = step[l];
    s.n = mesh_n.empty() ? 0 : mesh_n[l];
    if (!per[l].empty()) {
      s.median = median(per[l]);
      s.mad = median_abs_deviation(per[l]);
      int hits = 0;
      for (const auto& r : res.rows)
        if (r.level == l && r.exceeds) ++hits;
      const double p = static_cast<double>(per[l].size());
      s.exceedance = hits / p;
      s.exceedance_se = std::sqrt(s.exceedance * (1.0 - s.exceedance) / p);
    }
    res.levels.push_back(s);
    if (fit_level[l] && s.median > 0.0) {
      x.push_back(s.step);
      y.push_back(s.median);
      const double se = 1.2533 * 1.4826 * s.mad / (s.median * std::sqrt(static_cast<double>(per[l].size())));
      if (se <= 0.0) unit = true;
      w.push_back(se > 0.0 ? 1.0 / (se * se) : 1.0);
    }
  }
  if (unit) std::fill(w.begin(), w.end(), 1.0);
  res.fit.levels_used = static_cast<int>(x.size());
  if (x.size() >= 2) {
    const LineFit f = fit_loglog(x, y, w);
    res.fit.slope = f.slope;
    res.fit.slope_se = f.slope_se;
    res.fit.intercept = f.intercept;
    res.fit.slope_fine = f.slope;
  }
  if (x.size() >= 3) {
    const std::span<const double> xs(x), ys(y), ws(w);
    res.fit.slope_fine = fit_loglog(xs.subspan(1), ys.subspan(1), ws.subspan(1)).slope;
  }
}

}  // namespace

StudyResult run_temporal_study(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.tau_ladder.size() < 3) throw ConfigError("temporal study needs at least 3 tau levels");
  const int N = cfg.N_ref;
  const int J = cfg.noise.modes;
  const double tau_ref = cfg.tau_ladder.back();
  const int levels = static_cast<int>(cfg.tau_ladder.size());
  const Diffusion diffusion(cfg.noise, N);
  const SpectralField u0 = initial_velocity(cfg, N);
  const bool deterministic = diffusion.is_zero();

  StudyResult res;
  res.kind = StudyKind::temporal;
  std::vector<ErrorRow> first;
  for (int p = 0; p < cfg.paths; ++p) {
    if (deterministic && p > 0) {
      // Without noise every path is the same; replicate path 0.
      for (ErrorRow r : first) {
        r.path = p;
        res.rows.push_back(r);
      }
      continue;
    }
    const int M_ref = cfg.steps(tau_ref);
    const NoisePath fine = deterministic ? zero_path(M_ref, tau_ref, J) : sample_path(cfg.seed, p, M_ref, tau_ref, J);
    const Trajectory ref = run_trajectory(u0, fine, step_config(cfg, tau_ref, cfg.R_at(tau_ref)), diffusion);
    append_trajectory(res.trajectory, p, ref, cfg.R_at(tau_ref));

    for (int l = 0; l < levels; ++l) {
      const double tau = cfg.tau_ladder[l];
      const int factor = static_cast<int>(std::lround(tau / tau_ref));
      std::unique_ptr<Trajectory> own;
      const Trajectory* tr = &ref;
      if (factor > 1) {
        own = std::make_unique<Trajectory>(
            run_trajectory(u0, coarsen_path(fine, factor), step_config(cfg, tau, cfg.R_at(tau)), diffusion));
        tr = own.get();
      }
      // Stop index surrogate: the reference's stop on this grid, capped by
      // the level's own.
      const int m_star = std::min(ref.stop_index / factor, tr->stop_index);
      ErrorRow row;
      row.path = p;
      row.level = l;
      row.step = tau;
      row.stop_index = m_star;
      for (int m = 0; m <= m_star; ++m) {
        const SpectralField e = ref.states[static_cast<std::size_t>(m) * factor] - tr->states[m];
        const double l2 = seminorm(e, 0);
        row.max_l2 = std::max(row.max_l2, l2 * l2);
        if (m > 0) {
          const double h1 = seminorm(e, 1);
          row.h1_sum += tau * h1 * h1;
        }
      }
      res.rows.push_back(row);
      if (deterministic) first.push_back(row);
    }
  }
  std::stable_sort(res.rows.begin(), res.rows.end(),
                   [](const ErrorRow& a, const ErrorRow& b) { return a.level != b.level ? a.level < b.level : a.path < b.path; });
  std::vector<bool> fit(levels, true);
  fit.back() = false;  // the reference level has zero error by construction
  summarise(res, levels, cfg.xi, 2.0 * cfg.alpha, {}, fit);
  return res;
}

StudyResult run_spatial_study(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.n_ladder.size() < 3) throw ConfigError("spatial study needs at least 3 mesh levels");
  if (cfg.N_ref < 4 * cfg.n_ladder.back()) throw ConfigError("N_ref must be at least 4 * max n");
  const int N = cfg.N_ref;
  const int J = cfg.noise.modes;
  const double tau = cfg.tau_ladder.front();
  const int M = cfg.steps(tau);
  const int levels = static_cast<int>(cfg.n_ladder.size());
  const Diffusion diffusion(cfg.noise, N);
  const SpectralField u0 = initial_velocity(cfg, N);
  const bool deterministic = diffusion.is_zero();
  const StepConfig sc = step_config(cfg, tau, cfg.R);

  struct Level {
    std::unique_ptr<TaylorHoodSpace> space;
    std::unique_ptr<FemStepper> stepper;
    std::unique_ptr<FemDiffusion> noise;
    FemState u0;
  };
  std::vector<Level> lv(levels);
  for (int l = 0; l < levels; ++l) {
    lv[l].space = std::make_unique<TaylorHoodSpace>(cfg.n_ladder[l]);
    lv[l].stepper = std::make_unique<FemStepper>(*lv[l].space, sc);
    lv[l].noise = std::make_unique<FemDiffusion>(diffusion, *lv[l].space);
    lv[l].u0 = project_l2_divfree(*lv[l].space, u0).state;
  }

  StudyResult res;
  res.kind = StudyKind::spatial;
  std::vector<ErrorRow> first_rows;
  std::vector<FemRow> first_fem;
  for (int p = 0; p < cfg.paths; ++p) {
    if (deterministic && p > 0) {
      for (ErrorRow r : first_rows) {
        r.path = p;
        res.rows.push_back(r);
      }
      for (FemRow r : first_fem) {
        r.path = p;
        res.fem.push_back(r);
      }
      continue;
    }
    const NoisePath path = deterministic ? zero_path(M, tau, J) : sample_path(cfg.seed, p, M, tau, J);
    const Trajectory spec = run_trajectory(u0, path, sc, diffusion);
    append_trajectory(res.trajectory, p, spec, cfg.R);
    const int jr = spec.stop_index;
    for (int l = 0; l < levels; ++l) {
      const TaylorHoodSpace& space = *lv[l].space;
      const FemTrajectory fem = run_fem_trajectory(*lv[l].stepper, *lv[l].noise, lv[l].u0, path, jr);
      ErrorRow row;
      row.path = p;
      row.level = l;
      row.step = space.h();
      row.stop_index = jr;
      for (int m = 0; m <= jr; ++m) {
        const FemError e = error_vs_spectral(space, fem.states[m].velocity, spec.states[m]);
        row.max_l2 = std::max(row.max_l2, e.l2 * e.l2);
        if (m > 0) row.h1_sum += tau * e.h1 * e.h1;
        const FemRow fr{p, m, space.h(), space.n(), e.l2, e.h1};
        res.fem.push_back(fr);
        if (deterministic) first_fem.push_back(fr);
      }
      res.rows.push_back(row);
      if (deterministic) first_rows.push_back(row);
    }
  }
  std::stable_sort(res.rows.begin(), res.rows.end(),
                   [](const ErrorRow& a, const ErrorRow& b) { return a.level != b.level ? a.level < b.level : a.path < b.path; });
  summarise(res, levels, cfg.xi, 2.0 * cfg.beta, cfg.n_ladder, std::vector<bool>(levels, true));
  return res;
}

StoppingResult run_stopping_study(const RunConfig& cfg) {
  cfg.validate();
  const int N = cfg.N_ref;
  const int J = cfg.noise.modes;
  const Diffusion diffusion(cfg.noise, N);
  const SpectralField u0 = initial_velocity(cfg, N);
  const double tau_min = cfg.tau_ladder.back();
  const double tau_max = cfg.tau_ladder.front();
  // Only the first ell steps of the coarsest level matter; sample that window
  // on the finest grid and coarsen it for the other levels.
  const int window = std::max(1, cfg.ell) * static_cast<int>(std::lround(tau_max / tau_min));

  StoppingResult res;
  for (double tau : cfg.tau_ladder) {
    StoppingCell cell;
    cell.tau = tau;
    cell.R = cfg.R_at(tau);
    cell.ell = cfg.ell;
    cell.paths = cfg.paths;
    res.cells.push_back(cell);
  }
  for (int p = 0; p < cfg.paths; ++p) {
    const NoisePath fine =
        diffusion.is_zero() ? zero_path(window, tau_min, J) : sample_path(cfg.seed, p, window, tau_min, J);
    for (auto& cell : res.cells) {
      const int factor = static_cast<int>(std::lround(cell.tau / tau_min));
      StepConfig sc = step_config(cfg, cell.tau, cell.R);
      TrajectoryOptions opt;
      opt.store_states = false;
      opt.max_steps = cfg.ell;
      const Trajectory tr = run_trajectory(u0, coarsen_path(fine, factor), sc, diffusion, opt);
      const auto h2 = tr.h2_norms();
      const bool hit = *std::max_element(h2.begin(), h2.end()) >= cell.R;
      if (hit) ++cell.hits;
    }
  }
  for (auto& cell : res.cells) {
    cell.probability = static_cast<double>(cell.hits) / cell.paths;
    cell.standard_error = std::sqrt(cell.probability * (1.0 - cell.probability) / cell.paths);
    const Interval w = wilson_interval(cell.hits, cell.paths);
    cell.wilson_lo = w.lo;
    cell.wilson_hi = w.hi;
  }
  for (std::size_t i = 1; i < res.cells.size(); ++i) {
    const auto& a = res.cells[i - 1];
    const auto& b = res.cells[i];
    const double slack = 2.0 * std::hypot(a.standard_error, b.standard_error);
    if (b.probability > a.probability + slack) res.monotone = false;
  }
  return res;
}

}  // namespace snslab
