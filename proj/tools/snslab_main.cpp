#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "snslab/snslab.h"

namespace {

int exit_code(snslab_status s) {
  switch (s) {
    case SNSLAB_OK: return 0;
    case SNSLAB_INVARIANT_FAILURE: return 1;
    case SNSLAB_CONFIG_ERROR:
    case SNSLAB_INVALID_ARGUMENT: return 2;
    default: return 3;
  }
}

int report_error(snslab_status s) {
  std::fprintf(stderr, "snslab: %s\n", snslab_last_error());
  return exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale convergence studies for the stochastic Navier-Stokes schemes"};
  app.require_subcommand(1, 1);
  std::string config;
  std::string seed, paths, out;
  for (const char* name : {"temporal", "spatial", "stopping", "invariants"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "flat key=value config file")->required();
    sub->add_option("--seed", seed, "override the seed");
    sub->add_option("--paths", paths, "override the path count");
    sub->add_option("--out", out, "override the output directory");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string study = app.get_subcommands().front()->get_name();

  snslab_config* cfg = nullptr;
  snslab_status s = snslab_config_load(study.c_str(), config.c_str(), &cfg);
  if (s != SNSLAB_OK) return report_error(s);
  const std::pair<const char*, const std::string*> overrides[] = {{"seed", &seed}, {"paths", &paths}, {"out", &out}};
  for (const auto& [key, value] : overrides)
    if (!value->empty() && (s = snslab_config_set(cfg, key, value->c_str())) != SNSLAB_OK) {
      snslab_config_free(cfg);
      return report_error(s);
    }

  snslab_result* result = nullptr;
  s = snslab_run(cfg, &result);
  snslab_config_free(cfg);
  if (s != SNSLAB_OK) return report_error(s);
  std::fputs(snslab_result_summary(result), stdout);
  s = snslab_result_write(result);
  const bool passed = snslab_result_passed(result) != 0;
  snslab_result_free(result);
  if (s != SNSLAB_OK) return report_error(s);
  return passed ? 0 : exit_code(SNSLAB_INVARIANT_FAILURE);
}
