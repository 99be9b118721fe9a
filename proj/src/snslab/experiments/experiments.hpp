#pragma once

// Desk-scale convergence studies built on the spectral and finite element
// backends, plus the aggregated invariant checks.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "snslab/noise.hpp"
#include "snslab/stepper.hpp"

namespace snslab {

enum class StudyKind { temporal, spatial, stopping, invariants };

StudyKind parse_study_kind(const std::string& name);
const char* study_name(StudyKind kind);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  StudyKind kind = StudyKind::temporal;
  double T = 1.0;
  double mu = 1.0;
  DiffusionConfig noise{NoiseKind::additive, 2.0, 0.5, 16};
  int N_ref = 16;
  std::vector<double> tau_ladder = {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256};
  std::vector<int> n_ladder = {2, 3, 4, 6};
  double R = 10.0;
  /// R at level tau is R + R_growth * log(tau_0 / tau); 0 keeps R fixed.
  double R_growth = 0.0;
  int ell = 4;
  int paths = 64;
  std::uint64_t seed = 1;
  /// Exceedance threshold; 0 calibrates it to the coarsest level's median.
  double xi = 0.0;
  double alpha = 0.4;
  double beta = 0.9;
  std::string out = "out";
  /// Initial velocity: random | mode | constant | zero.
  std::string u0 = "random";
  double u0_amp = 1.0;
  double solver_tol = 1e-10;
  /// Invariant suite: when > 0, replaces every defect tolerance.
  double check_tol = 0.0;

  double R_at(double tau) const;
  int steps(double tau) const;
  void validate() const;
};

/// Defaults differ per study (the spatial reference must resolve 4 * max n).
RunConfig default_config(StudyKind kind);
/// Flat key=value text; '#' starts a comment. Unknown keys and malformed
/// values raise ConfigError.
RunConfig parse_config(std::istream& in, StudyKind kind);
RunConfig load_config(const std::filesystem::path& file, StudyKind kind);
/// Applies one key=value pair with the same rules as the file parser.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

SpectralField initial_velocity(const RunConfig& cfg, int n);

struct ErrorRow {
  int path = 0;
  int level = 0;
  double step = 0.0;    // tau or h
  double max_l2 = 0.0;  // max_m ||e_m||^2
  double h1_sum = 0.0;  // sum_m tau ||grad e_m||^2
  int stop_index = 0;
  bool exceeds = false;

  double error() const { return max_l2 + h1_sum; }
};

struct LevelSummary {
  int level = 0;
  double step = 0.0;
  int n = 0;  // mesh level (spatial study)
  double median = 0.0;
  double mad = 0.0;
  double exceedance = 0.0;
  double exceedance_se = 0.0;
};

struct RateFit {
  double slope = 0.0;
  double slope_se = 0.0;
  double intercept = 0.0;
  /// Slope refitted without the coarsest level (robustness gate).
  double slope_fine = 0.0;
  int levels_used = 0;
};

struct TrajectoryRow {
  int path = 0;
  int m = 0;
  double t = 0.0;
  double norm_l2 = 0.0, norm_h1 = 0.0, norm_h2 = 0.0, inc_h1 = 0.0;
  bool stopped = false;
  int solver_iters = 0;
};

struct FemRow {
  int path = 0;
  int m = 0;
  double h = 0.0;
  int n = 0;
  double err_l2 = 0.0, err_h1 = 0.0;
};

struct StudyResult {
  StudyKind kind = StudyKind::temporal;
  std::vector<ErrorRow> rows;
  std::vector<LevelSummary> levels;
  RateFit fit;
  double xi = 0.0;
  double exponent = 0.0;  // 2 alpha or 2 beta
  std::vector<TrajectoryRow> trajectory;
  std::vector<FemRow> fem;
};

StudyResult run_temporal_study(const RunConfig& cfg);
StudyResult run_spatial_study(const RunConfig& cfg);

struct StoppingCell {
  double tau = 0.0;
  double R = 0.0;
  int ell = 0;
  int paths = 0;
  int hits = 0;
  double probability = 0.0;
  double standard_error = 0.0;
  double wilson_lo = 0.0, wilson_hi = 0.0;
};

struct StoppingResult {
  std::vector<StoppingCell> cells;
  /// P non-increasing as tau decreases, within 2 standard errors.
  bool monotone = true;
};

StoppingResult run_stopping_study(const RunConfig& cfg);

struct CheckResult {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool passed = false;
};

struct InvariantReport {
  std::vector<CheckResult> checks;
  /// Normal draws made while the gamma = 0 checks ran (must be 0).
  std::uint64_t deterministic_draws = 0;
  bool passed() const;
};

InvariantReport run_invariant_suite(const RunConfig& cfg);

/// Writes the study's CSV files into cfg.out. Byte-identical for a fixed
/// config and seed.
void emit_report(const RunConfig& cfg, const StudyResult& result);
void emit_report(const RunConfig& cfg, const StoppingResult& result);
void emit_report(const RunConfig& cfg, const InvariantReport& report);

/// Individual writers (header row always present).
void write_error_csv(std::ostream& out, const std::vector<ErrorRow>& rows);
/// One rate row per study result.
void write_rates_csv(std::ostream& out, std::span<const StudyResult> results);
void write_levels_csv(std::ostream& out, const StudyResult& result);
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows);
void write_fem_csv(std::ostream& out, const std::vector<FemRow>& rows);
void write_stopping_csv(std::ostream& out, const StoppingResult& result);
void write_invariants_csv(std::ostream& out, const InvariantReport& report);

}  // namespace snslab
