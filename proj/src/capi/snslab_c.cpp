#include <fmt/format.h>

#include <exception>
#include <string>
#include <variant>

#include "snslab/experiments/experiments.hpp"
#include "snslab/snslab.h"

struct snslab_config {
  snslab::RunConfig cfg;
};

struct snslab_result {
  snslab::RunConfig cfg;
  std::variant<snslab::StudyResult, snslab::StoppingResult, snslab::InvariantReport> data;
  std::string summary;
};

namespace {

thread_local std::string g_error;

snslab_status fail(snslab_status s, const std::string& msg) {
  g_error = msg;
  return s;
}

// Maps exceptions escaping the core onto status codes.
template <class F>
snslab_status guarded(F&& body) {
  try {
    g_error.clear();
    return body();
  } catch (const snslab::ConfigError& e) {
    return fail(SNSLAB_CONFIG_ERROR, e.what());
  } catch (const snslab::SolverError& e) {
    return fail(SNSLAB_SOLVER_FAILURE, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(SNSLAB_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(SNSLAB_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(SNSLAB_INTERNAL_ERROR, "unknown error");
  }
}

std::string summarise(const snslab::StudyResult& r) {
  std::string s;
  for (const auto& l : r.levels) {
    s += fmt::format("level {} step {:.6g}", l.level, l.step);
    if (l.n > 0) s += fmt::format(" n {}", l.n);
    s += fmt::format(" median {:.6g} mad {:.3g} exceedance {:.3f}\n", l.median, l.mad, l.exceedance);
  }
  s += fmt::format("slope {:.4f} +- {:.4f} (without coarsest {:.4f}) over {} levels, xi {:.4g}, exponent {:.3g}\n",
                   r.fit.slope, 1.96 * r.fit.slope_se, r.fit.slope_fine, r.fit.levels_used, r.xi, r.exponent);
  return s;
}

std::string summarise(const snslab::StoppingResult& r) {
  std::string s;
  for (const auto& c : r.cells)
    s += fmt::format("tau {:.6g} R {:.4g} ell {} hits {}/{} p {:.4f} se {:.4f} wilson [{:.4f}, {:.4f}]\n", c.tau, c.R,
                     c.ell, c.hits, c.paths, c.probability, c.standard_error, c.wilson_lo, c.wilson_hi);
  s += fmt::format("monotone {}\n", r.monotone ? "yes" : "no");
  return s;
}

std::string summarise(const snslab::InvariantReport& r) {
  std::string s;
  for (const auto& c : r.checks)
    s += fmt::format("{} {} value {:.4g} limit {:.4g}\n", c.passed ? "PASS" : "FAIL", c.name, c.value, c.limit);
  s += fmt::format("normal draws during deterministic checks: {}\n", r.deterministic_draws);
  return s;
}

}  // namespace

extern "C" {

const char* snslab_last_error(void) { return g_error.c_str(); }

const char* snslab_version(void) { return "0.1.0"; }

snslab_status snslab_config_default(const char* study, snslab_config** out) {
  if (!study || !out) return fail(SNSLAB_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new snslab_config{snslab::default_config(snslab::parse_study_kind(study))};
    return SNSLAB_OK;
  });
}

snslab_status snslab_config_load(const char* study, const char* path, snslab_config** out) {
  if (!study || !path || !out) return fail(SNSLAB_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new snslab_config{snslab::load_config(path, snslab::parse_study_kind(study))};
    return SNSLAB_OK;
  });
}

snslab_status snslab_config_set(snslab_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return fail(SNSLAB_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    snslab::set_config_value(cfg->cfg, key, value);
    return SNSLAB_OK;
  });
}

snslab_status snslab_config_validate(const snslab_config* cfg) {
  if (!cfg) return fail(SNSLAB_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    cfg->cfg.validate();
    return SNSLAB_OK;
  });
}

void snslab_config_free(snslab_config* cfg) { delete cfg; }

snslab_status snslab_run(const snslab_config* cfg, snslab_result** out) {
  if (!cfg || !out) return fail(SNSLAB_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto& c = cfg->cfg;
    c.validate();
    auto* r = new snslab_result{c, snslab::InvariantReport{}, {}};
    try {
      switch (c.kind) {
        case snslab::StudyKind::temporal: r->data = snslab::run_temporal_study(c); break;
        case snslab::StudyKind::spatial: r->data = snslab::run_spatial_study(c); break;
        case snslab::StudyKind::stopping: r->data = snslab::run_stopping_study(c); break;
        case snslab::StudyKind::invariants: r->data = snslab::run_invariant_suite(c); break;
      }
      r->summary = std::visit([](const auto& d) { return summarise(d); }, r->data);
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
    return SNSLAB_OK;
  });
}

snslab_status snslab_result_write(const snslab_result* result) {
  if (!result) return fail(SNSLAB_INVALID_ARGUMENT, "null argument");
  try {
    g_error.clear();
    std::visit([&](const auto& d) { snslab::emit_report(result->cfg, d); }, result->data);
    return SNSLAB_OK;
  } catch (const std::exception& e) {
    return fail(SNSLAB_IO_ERROR, e.what());
  }
}

int snslab_result_passed(const snslab_result* result) {
  if (!result) return 0;
  if (const auto* inv = std::get_if<snslab::InvariantReport>(&result->data)) return inv->passed() ? 1 : 0;
  if (const auto* st = std::get_if<snslab::StoppingResult>(&result->data)) return st->monotone ? 1 : 0;
  return 1;
}

snslab_status snslab_result_slope(const snslab_result* result, double* slope, double* slope_se,
                                  double* slope_without_coarsest) {
  if (!result) return fail(SNSLAB_INVALID_ARGUMENT, "null argument");
  const auto* r = std::get_if<snslab::StudyResult>(&result->data);
  if (!r) return fail(SNSLAB_INVALID_ARGUMENT, "not a rate study");
  if (slope) *slope = r->fit.slope;
  if (slope_se) *slope_se = r->fit.slope_se;
  if (slope_without_coarsest) *slope_without_coarsest = r->fit.slope_fine;
  return SNSLAB_OK;
}

const char* snslab_result_summary(const snslab_result* result) { return result ? result->summary.c_str() : ""; }

void snslab_result_free(snslab_result* result) { delete result; }

}  // extern "C"
