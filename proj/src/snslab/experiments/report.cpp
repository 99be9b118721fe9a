#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <ostream>

#include "snslab/experiments/experiments.hpp"

namespace snslab {

namespace {

std::ofstream open_output(const RunConfig& cfg, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out, ec);
  const auto file = std::filesystem::path(cfg.out) / name;
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  return out;
}

void finish(std::ofstream& out, const std::string& name) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + name);
}

}  // namespace

void write_error_csv(std::ostream& out, const std::vector<ErrorRow>& rows) {
  out << "path,level,step,max_l2,h1_sum,error,stop_index,exceeds\n";
  for (const auto& r : rows)
    out << fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g},{},{}\n", r.path, r.level, r.step, r.max_l2, r.h1_sum,
                       r.error(), r.stop_index, r.exceeds ? 1 : 0);
}

void write_levels_csv(std::ostream& out, const StudyResult& result) {
  out << "level,step,n,median,mad,exceedance,exceedance_se\n";
  for (const auto& l : result.levels)
    out << fmt::format("{},{:.17g},{},{:.17g},{:.17g},{:.17g},{:.17g}\n", l.level, l.step, l.n, l.median, l.mad,
                       l.exceedance, l.exceedance_se);
}

void write_rates_csv(std::ostream& out, std::span<const StudyResult> results) {
  out << "study,levels,slope,slope_lo,slope_hi,slope_without_coarsest,xi,exponent\n";
  for (const auto& r : results) {
    const double half = 1.96 * r.fit.slope_se;
    out << fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", study_name(r.kind), r.fit.levels_used,
                       r.fit.slope, r.fit.slope - half, r.fit.slope + half, r.fit.slope_fine, r.xi, r.exponent);
  }
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows) {
  out << "path,m,t,normL2,normH1,normH2,incH1,jR_flag,solver_iters\n";
  for (const auto& r : rows)
    out << fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{}\n", r.path, r.m, r.t, r.norm_l2, r.norm_h1,
                       r.norm_h2, r.inc_h1, r.stopped ? 1 : 0, r.solver_iters);
}

void write_fem_csv(std::ostream& out, const std::vector<FemRow>& rows) {
  out << "path,m,h,n,errL2,errH1\n";
  for (const auto& r : rows)
    out << fmt::format("{},{},{:.17g},{},{:.17g},{:.17g}\n", r.path, r.m, r.h, r.n, r.err_l2, r.err_h1);
}

void write_stopping_csv(std::ostream& out, const StoppingResult& result) {
  out << "tau,R,ell,paths,hits,probability,standard_error,wilson_lo,wilson_hi\n";
  for (const auto& c : result.cells)
    out << fmt::format("{:.17g},{:.17g},{},{},{},{:.17g},{:.17g},{:.17g},{:.17g}\n", c.tau, c.R, c.ell, c.paths, c.hits,
                       c.probability, c.standard_error, c.wilson_lo, c.wilson_hi);
}

void write_invariants_csv(std::ostream& out, const InvariantReport& report) {
  out << "check,value,limit,passed\n";
  for (const auto& c : report.checks)
    out << fmt::format("{},{:.17g},{:.17g},{}\n", c.name, c.value, c.limit, c.passed ? 1 : 0);
}

void emit_report(const RunConfig& cfg, const StudyResult& result) {
  const std::string stem = study_name(result.kind);
  const auto write = [&](const std::string& name, auto&& body) {
    auto out = open_output(cfg, name);
    body(out);
    finish(out, name);
  };
  write(stem + "_errors.csv", [&](std::ostream& o) { write_error_csv(o, result.rows); });
  write(stem + "_levels.csv", [&](std::ostream& o) { write_levels_csv(o, result); });
  write(stem + "_rates.csv", [&](std::ostream& o) { write_rates_csv(o, std::span<const StudyResult>(&result, 1)); });
  write(stem + "_trajectory.csv", [&](std::ostream& o) { write_trajectory_csv(o, result.trajectory); });
  if (result.kind == StudyKind::spatial) write("spatial_fem.csv", [&](std::ostream& o) { write_fem_csv(o, result.fem); });
}

void emit_report(const RunConfig& cfg, const StoppingResult& result) {
  auto out = open_output(cfg, "stopping.csv");
  write_stopping_csv(out, result);
  finish(out, "stopping.csv");
}

void emit_report(const RunConfig& cfg, const InvariantReport& report) {
  auto out = open_output(cfg, "invariants.csv");
  write_invariants_csv(out, report);
  finish(out, "invariants.csv");
}

}  // namespace snslab
