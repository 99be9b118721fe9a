#include "snslab/noise.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "snslab/stats.hpp"

namespace snslab {

std::vector<NoiseBasisMode> build_basis(int modes, double decay) {
  if (modes < 1) throw std::invalid_argument("noise basis needs at least one mode");
  if (decay < 2.0) throw std::invalid_argument("noise decay exponent r must be >= 2");

  std::vector<NoiseBasisMode> basis;
  basis.reserve(static_cast<std::size_t>(modes));
  for (int shell = 1; static_cast<int>(basis.size()) < modes; ++shell) {
    // Representatives of +-k with |k|^2 = shell: first non-zero entry positive.
    std::vector<std::array<int, 3>> ks;
    const int r = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(shell))));
    for (int a = -r; a <= r; ++a)
      for (int b = -r; b <= r; ++b)
        for (int c = -r; c <= r; ++c) {
          if (a * a + b * b + c * c != shell) continue;
          const bool positive = a > 0 || (a == 0 && (b > 0 || (b == 0 && c > 0)));
          if (positive) ks.push_back({a, b, c});
        }
    std::sort(ks.begin(), ks.end(), std::greater<>());
    for (const auto& k : ks)
      for (Profile p : {Profile::cos, Profile::sin}) {
        if (static_cast<int>(basis.size()) == modes) break;
        const int index = static_cast<int>(basis.size()) + 1;
        basis.push_back({index, k, std::pow(1.0 + shell, -decay), p});
      }
  }
  return basis;
}

void DiffusionConfig::validate() const {
  if (modes < 1) throw std::invalid_argument("noise.J must be >= 1");
  if (decay < 2.0) throw std::invalid_argument("noise.r must be >= 2");
  if (!(gamma >= 0.0)) throw std::invalid_argument("noise.gamma must be >= 0");
}

// Counter-based generation ----------------------------------------------------

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint64_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const std::uint64_t p0 = kM0 * ctr[0];
    const std::uint64_t p1 = kM1 * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

namespace {
std::atomic<std::uint64_t> g_draws{0};
}  // namespace

std::uint64_t normal_draw_count() { return g_draws.load(std::memory_order_relaxed); }

double keyed_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint64_t mode) {
  g_draws.fetch_add(1, std::memory_order_relaxed);
  const std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(mode),
                                            static_cast<std::uint32_t>(path),
                                            static_cast<std::uint32_t>((path >> 32) ^ (step >> 32) ^ (mode >> 48))};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  const auto w = philox4x32(ctr, key);
  constexpr double kScale = 0x1.0p-53;
  const std::uint64_t a = (static_cast<std::uint64_t>(w[0]) << 32 | w[1]) >> 11;
  const std::uint64_t b = (static_cast<std::uint64_t>(w[2]) << 32 | w[3]) >> 11;
  const double u1 = (static_cast<double>(a) + 1.0) * kScale;  // (0, 1]
  const double u2 = static_cast<double>(b) * kScale;          // [0, 1)
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

NoisePath::NoisePath(int steps, int modes, double tau, std::uint64_t seed, std::uint64_t path_index,
                     std::vector<double> increments)
    : steps_(steps), modes_(modes), tau_(tau), seed_(seed), path_index_(path_index), increments_(std::move(increments)) {
  if (increments_.size() != static_cast<std::size_t>(steps) * modes)
    throw std::invalid_argument("noise path: increment array has wrong size");
}

std::span<const double> NoisePath::step(int m) const {
  return std::span<const double>(increments_).subspan(static_cast<std::size_t>(m) * modes_, modes_);
}

NoisePath sample_path(std::uint64_t seed, std::uint64_t path_index, int steps, double tau, int modes) {
  if (steps < 1) throw std::invalid_argument("noise path needs at least one step");
  if (!(tau > 0.0)) throw std::invalid_argument("noise path step size must be positive");
  if (modes < 1) throw std::invalid_argument("noise path needs at least one mode");
  std::vector<double> incr(static_cast<std::size_t>(steps) * modes);
  const double scale = std::sqrt(tau);
  for (int m = 0; m < steps; ++m)
    for (int j = 0; j < modes; ++j)
      incr[static_cast<std::size_t>(m) * modes + j] = scale * keyed_normal(seed, path_index, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(j));
  return NoisePath(steps, modes, tau, seed, path_index, std::move(incr));
}

NoisePath coarsen_path(const NoisePath& path, int factor) {
  if (factor < 1 || path.steps() % factor != 0)
    throw std::invalid_argument("coarsening factor " + std::to_string(factor) + " does not divide " + std::to_string(path.steps()));
  const int steps = path.steps() / factor;
  const int modes = path.modes();
  std::vector<double> incr(static_cast<std::size_t>(steps) * modes, 0.0);
  for (int m = 0; m < steps; ++m)
    for (int j = 0; j < modes; ++j) {
      double s = 0.0;
      for (int f = 0; f < factor; ++f) s += path.increment(m * factor + f, j);
      incr[static_cast<std::size_t>(m) * modes + j] = s;
    }
  return NoisePath(steps, modes, path.tau() * factor, path.seed(), path.path_index(), std::move(incr));
}

void write_path(std::ostream& out, const NoisePath& path) {
  for (double v : path.increments()) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!out) throw std::runtime_error("noise path write failed");
}

// Diffusion coefficient -------------------------------------------------------

Diffusion::Diffusion(DiffusionConfig config, int n) : config_(config), n_(n) {
  config_.validate();
  basis_ = build_basis(config_.modes, config_.decay);
  const std::size_t size = static_cast<std::size_t>(n) * n * n;
  profiles_.reserve(basis_.size());
  for (std::size_t j = 0; j < basis_.size(); ++j) {
    std::vector<double> grid(size);
    std::size_t idx = 0;
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2)
        for (int i3 = 0; i3 < n; ++i3, ++idx) grid[idx] = weight(static_cast<int>(j), grid_point(n, i1, i2, i3));
    profiles_.push_back(std::move(grid));
  }
}

double Diffusion::weight(int j, const Vec3& x) const {
  const auto& mode = basis_[static_cast<std::size_t>(j)];
  const double phase = mode.k[0] * x[0] + mode.k[1] * x[1] + mode.k[2] * x[2];
  const double s = mode.profile == Profile::cos ? std::cos(phase) : std::sin(phase);
  return config_.gamma * mode.amplitude * s;
}

Vec3 Diffusion::nonlinearity(const Vec3& u) const {
  if (config_.kind == NoiseKind::additive) {
    const double c = 1.0 / std::sqrt(3.0);
    return {c, c, c};
  }
  return {std::sin(u[0]), std::sin(u[1]), std::sin(u[2])};
}

std::vector<double> Diffusion::weighted_sum(std::span<const double> incr) const {
  std::vector<double> s(profiles_.front().size(), 0.0);
  for (std::size_t j = 0; j < basis_.size(); ++j) {
    const double w = incr[j];
    if (w == 0.0) continue;
    const auto& p = profiles_[j];
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += w * p[i];
  }
  return s;
}

SpectralField Diffusion::apply(const SpectralField& u, std::span<const double> incr) const {
  if (incr.size() != basis_.size())
    throw std::invalid_argument("apply_diffusion: expected " + std::to_string(basis_.size()) + " increments, got " +
                                std::to_string(incr.size()));
  if (u.n() != n_) throw std::invalid_argument("apply_diffusion: resolution mismatch");
  if (is_zero()) return SpectralField(n_);
  const std::vector<double> s = weighted_sum(incr);
  VectorGrid out{n_, {}};
  if (config_.kind == NoiseKind::additive) {
    const double c = 1.0 / std::sqrt(3.0);
    for (int comp = 0; comp < 3; ++comp) {
      out.values[comp].resize(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) out.values[comp][i] = c * s[i];
    }
  } else {
    const VectorGrid ug = to_grid(u);
    for (int comp = 0; comp < 3; ++comp) {
      out.values[comp].resize(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) out.values[comp][i] = s[i] * std::sin(ug.values[comp][i]);
    }
  }
  return from_grid(out);
}

std::vector<SpectralField> Diffusion::mode_fields(const SpectralField& u) const {
  if (u.n() != n_) throw std::invalid_argument("diffusion: resolution mismatch");
  std::vector<SpectralField> fields;
  fields.reserve(basis_.size());
  VectorGrid ug;
  if (config_.kind == NoiseKind::multiplicative) ug = to_grid(u);
  const double c = 1.0 / std::sqrt(3.0);
  for (std::size_t j = 0; j < basis_.size(); ++j) {
    VectorGrid g{n_, {}};
    for (int comp = 0; comp < 3; ++comp) {
      g.values[comp].resize(profiles_[j].size());
      for (std::size_t i = 0; i < profiles_[j].size(); ++i)
        g.values[comp][i] = profiles_[j][i] * (config_.kind == NoiseKind::additive ? c : std::sin(ug.values[comp][i]));
    }
    fields.push_back(from_grid(g));
  }
  return fields;
}

double Diffusion::hs_norm(const SpectralField& u, int order) const {
  if (order < 0 || order > 2) throw std::invalid_argument("diffusion_hs_norm: order must be 0, 1 or 2");
  double sum = 0.0;
  for (const auto& f : mode_fields(u)) {
    const double v = sobolev_norm(f, order);
    sum += v * v;
  }
  return std::sqrt(sum);
}

double Diffusion::hs_distance(const SpectralField& u, const SpectralField& v) const {
  const auto a = mode_fields(u);
  const auto b = mode_fields(v);
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = sobolev_norm(a[j] - b[j], 0);
    sum += d * d;
  }
  return std::sqrt(sum);
}

SpectralField apply_diffusion(const DiffusionConfig& config, const SpectralField& u, std::span<const double> incr) {
  return Diffusion(config, u.n()).apply(u, incr);
}

double diffusion_hs_norm(const DiffusionConfig& config, const SpectralField& u, int order) {
  return Diffusion(config, u.n()).hs_norm(u, order);
}

LipschitzProbe lipschitz_probe(const DiffusionConfig& config, int n, std::uint64_t seed, int pairs) {
  const Diffusion d(config, n);
  std::mt19937_64 rng(seed);
  LipschitzProbe out;
  for (const auto& m : d.basis()) out.bound += m.amplitude * m.amplitude;
  out.bound = config.gamma * std::sqrt(out.bound);
  const int kmax = std::min(2, dealias_cutoff(n));
  for (int t = 0; t < pairs; ++t) {
    const SpectralField u = random_divfree_field(n, rng, kmax, 1.0, 1.0 + t % 5);
    const SpectralField v = random_divfree_field(n, rng, kmax, 1.0, 1.0 + t % 7);
    const double du = sobolev_norm(u - v, 0);
    if (du > 0.0) out.worst_ratio = std::max(out.worst_ratio, d.hs_distance(u, v) / du);
  }
  return out;
}

GrowthProbe growth_probe(const DiffusionConfig& config, int n, std::uint64_t seed, int samples) {
  const Diffusion d(config, n);
  std::mt19937_64 rng(seed);
  const int kmax = std::min(2, dealias_cutoff(n));
  GrowthProbe out;
  std::vector<double> xs, ys;
  for (int t = 0; t < samples; ++t) {
    const double l2 = std::pow(10.0, -1.0 + 4.0 * t / std::max(1, samples - 1));
    const SpectralField u = random_divfree_field(n, rng, kmax, 1.0, l2);
    const double x = 1.0 + sobolev_norm(u, 1);
    const double y = d.hs_norm(u, 1);
    out.constant = std::max(out.constant, y / x);
    if (y > 0.0) {
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  if (xs.size() >= 2) out.slope = fit_loglog(xs, ys).slope;
  return out;
}

}  // namespace snslab
