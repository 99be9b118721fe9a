#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "snslab/experiments/experiments.hpp"

namespace snslab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  // Accepts "0.25" and "1/4".
  const auto slash = text.find('/');
  if (slash != std::string::npos)
    return parse_double(key, text.substr(0, slash)) / parse_double(key, text.substr(slash + 1));
  const std::string t = trim(text);
  if (t == "inf") return kNoTruncation;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError("config: '" + key + "' expects a number, got '" + text + "'");
  return v;
}

long long parse_integer(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError("config: '" + key + "' expects an integer, got '" + text + "'");
  return v;
}

template <class T, class F>
std::vector<T> parse_list(const std::string& text, F item) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(item(trim(tok)));
  return out;
}

bool is_integer_ratio(double a, double b) {
  const double r = a / b;
  return r >= 1.0 - 1e-12 && std::abs(r - std::round(r)) <= 1e-9 * r;
}

}  // namespace

StudyKind parse_study_kind(const std::string& name) {
  if (name == "temporal") return StudyKind::temporal;
  if (name == "spatial") return StudyKind::spatial;
  if (name == "stopping") return StudyKind::stopping;
  if (name == "invariants") return StudyKind::invariants;
  throw ConfigError("unknown study '" + name + "'");
}

const char* study_name(StudyKind kind) {
  switch (kind) {
    case StudyKind::temporal: return "temporal";
    case StudyKind::spatial: return "spatial";
    case StudyKind::stopping: return "stopping";
    case StudyKind::invariants: return "invariants";
  }
  return "?";
}

double RunConfig::R_at(double tau) const {
  if (R_growth == 0.0) return R;
  return R + R_growth * std::log(tau_ladder.front() / tau);
}

int RunConfig::steps(double tau) const { return static_cast<int>(std::lround(T / tau)); }

void RunConfig::validate() const {
  if (!(T > 0.0)) throw ConfigError("config: T must be positive");
  if (!(mu > 0.0)) throw ConfigError("config: mu must be positive");
  if (noise.modes < 1) throw ConfigError("config: noise.J must be at least 1");
  if (noise.decay < 2.0) throw ConfigError("config: noise.r must be at least 2");
  if (!(noise.gamma >= 0.0)) throw ConfigError("config: noise.gamma must be nonnegative");
  if (N_ref < 4) throw ConfigError("config: N_ref must be at least 4");
  if (!(R > 0.0)) throw ConfigError("config: R must be positive");
  if (R_growth < 0.0) throw ConfigError("config: R_growth must be nonnegative");
  if (ell < 0) throw ConfigError("config: ell must be nonnegative");
  if (paths < 8) throw ConfigError("config: paths must be at least 8");
  if (xi < 0.0) throw ConfigError("config: xi must be positive (0 calibrates)");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw ConfigError("config: alpha and beta must be positive");
  if (!(solver_tol > 0.0) || solver_tol > 1e-6) throw ConfigError("config: solver_tol must be in (0, 1e-6]");
  if (check_tol < 0.0) throw ConfigError("config: check_tol must be nonnegative");
  if (u0 != "random" && u0 != "mode" && u0 != "constant" && u0 != "zero")
    throw ConfigError("config: u0 must be random, mode, constant or zero");
  if (tau_ladder.empty()) throw ConfigError("config: tau_ladder is empty");
  for (std::size_t i = 0; i < tau_ladder.size(); ++i) {
    if (!(tau_ladder[i] > 0.0)) throw ConfigError("config: tau_ladder entries must be positive");
    if (!is_integer_ratio(T, tau_ladder[i])) throw ConfigError("config: tau_ladder entries must divide T");
    if (i > 0 && (!(tau_ladder[i] < tau_ladder[i - 1]) || !is_integer_ratio(tau_ladder[i - 1], tau_ladder[i])))
      throw ConfigError("config: tau_ladder must be strictly decreasing and nested");
  }
  for (std::size_t i = 0; i < n_ladder.size(); ++i) {
    if (n_ladder[i] < 2) throw ConfigError("config: n_ladder entries must be at least 2");
    if (i > 0 && n_ladder[i] <= n_ladder[i - 1]) throw ConfigError("config: n_ladder must be increasing");
  }
  switch (kind) {
    case StudyKind::temporal:
      if (tau_ladder.size() < 3) throw ConfigError("config: temporal study needs at least 3 tau levels");
      break;
    case StudyKind::spatial:
      if (n_ladder.size() < 3) throw ConfigError("config: spatial study needs at least 3 mesh levels");
      if (N_ref < 4 * n_ladder.back()) throw ConfigError("config: N_ref must be at least 4 * max n");
      break;
    case StudyKind::stopping:
      if (paths < 32) throw ConfigError("config: stopping study needs at least 32 paths");
      break;
    case StudyKind::invariants: break;
  }
}

RunConfig default_config(StudyKind kind) {
  RunConfig cfg;
  cfg.kind = kind;
  if (kind == StudyKind::spatial) {
    cfg.N_ref = 24;
    cfg.tau_ladder = {1.0 / 16};
  }
  if (kind == StudyKind::stopping) cfg.tau_ladder = {1.0 / 32, 1.0 / 64, 1.0 / 128};
  return cfg;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const StudyKind kind = cfg.kind;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const auto real = [](double& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = parse_double(k, v); };
  };
  const auto integer = [](int& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = static_cast<int>(parse_integer(k, v)); };
  };
  const std::map<std::string, Setter> setters = {
      {"kind",
       [&](const std::string& k, const std::string& v) {
         if (parse_study_kind(v) != kind) throw ConfigError("config: '" + k + "' does not match the subcommand");
       }},
      {"T", real(cfg.T)},
      {"mu", real(cfg.mu)},
      {"noise.kind",
       [&](const std::string& k, const std::string& v) {
         if (v == "additive") cfg.noise.kind = NoiseKind::additive;
         else if (v == "multiplicative") cfg.noise.kind = NoiseKind::multiplicative;
         else throw ConfigError("config: '" + k + "' must be additive or multiplicative");
       }},
      {"noise.J", integer(cfg.noise.modes)},
      {"noise.r", real(cfg.noise.decay)},
      {"noise.gamma", real(cfg.noise.gamma)},
      {"N_ref", integer(cfg.N_ref)},
      {"tau_ladder",
       [&](const std::string& k, const std::string& v) {
         cfg.tau_ladder = parse_list<double>(v, [&](const std::string& t) { return parse_double(k, t); });
       }},
      {"n_ladder",
       [&](const std::string& k, const std::string& v) {
         cfg.n_ladder =
             parse_list<int>(v, [&](const std::string& t) { return static_cast<int>(parse_integer(k, t)); });
       }},
      {"R", real(cfg.R)},
      {"R_growth", real(cfg.R_growth)},
      {"ell", integer(cfg.ell)},
      {"paths", integer(cfg.paths)},
      {"seed",
       [&](const std::string& k, const std::string& v) {
         const long long s = parse_integer(k, v);
         if (s < 0) throw ConfigError("config: seed must be nonnegative");
         cfg.seed = static_cast<std::uint64_t>(s);
       }},
      {"xi", real(cfg.xi)},
      {"alpha", real(cfg.alpha)},
      {"beta", real(cfg.beta)},
      {"out", [&](const std::string&, const std::string& v) { cfg.out = v; }},
      {"u0", [&](const std::string&, const std::string& v) { cfg.u0 = v; }},
      {"u0_amp", real(cfg.u0_amp)},
      {"solver_tol", real(cfg.solver_tol)},
      {"check_tol", real(cfg.check_tol)},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("unknown key '" + key + "'");
  it->second(key, value);
}

RunConfig parse_config(std::istream& in, StudyKind kind) {
  RunConfig cfg = default_config(kind);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    try {
      set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& file, StudyKind kind) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  return parse_config(in, kind);
}

SpectralField initial_velocity(const RunConfig& cfg, int n) {
  if (cfg.u0 == "zero") {
    SpectralField u(n);
    u.set_divergence_free(true);
    return u;
  }
  if (cfg.u0 == "constant") {
    SpectralField u = constant_field(n, {cfg.u0_amp, -0.5 * cfg.u0_amp, 0.25 * cfg.u0_amp});
    u.set_divergence_free(true);
    return u;
  }
  if (cfg.u0 == "mode") return shear_mode(n, cfg.u0_amp);
  // The field is drawn at a fixed resolution so every N sees the same data.
  std::mt19937_64 rng(cfg.seed);
  const SpectralField base = random_divfree_field(8, rng, 2, 1.0, cfg.u0_amp);
  SpectralField u(n);
  const int kmax = std::min(2, dealias_cutoff(n));
  for (int c = 0; c < 3; ++c)
    for (int k1 = -kmax; k1 <= kmax; ++k1)
      for (int k2 = -kmax; k2 <= kmax; ++k2)
        for (int k3 = -kmax; k3 <= kmax; ++k3) u.at(c, k1, k2, k3) = base.at(c, k1, k2, k3);
  u.set_divergence_free(true);
  return u;
}

}  // namespace snslab
