#pragma once

// Truncated cylindrical Wiener process and the diffusion coefficient Phi.
//
// The auxiliary space is spanned by J abstract modes e_j. Mode j acts on the
// torus through a trigonometric profile sigma_j(x) in {cos(k_j.x), sin(k_j.x)}
// with amplitude lambda_j = (1+|k_j|^2)^{-r}:
//
//   multiplicative: Phi(u) e_j = gamma lambda_j sigma_j(x) (sin u1, sin u2, sin u3)
//   additive:       Phi(u) e_j = gamma lambda_j sigma_j(x) (1, 1, 1) / sqrt(3)

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "snslab/spectral.hpp"

namespace snslab {

enum class NoiseKind { additive, multiplicative };
enum class Profile { cos, sin };

struct NoiseBasisMode {
  int index = 0;  // 1-based
  std::array<int, 3> k{};
  double amplitude = 0.0;
  Profile profile = Profile::cos;
};

/// Enumerates J modes ordered by |k|, then by k in descending lexicographic
/// order within a shell, then cos before sin. Only one of +-k is used.
std::vector<NoiseBasisMode> build_basis(int modes, double decay);

struct DiffusionConfig {
  NoiseKind kind = NoiseKind::additive;
  double decay = 2.0;  // r
  double gamma = 0.5;
  int modes = 16;      // J

  void validate() const;
};

// Counter-based generation ----------------------------------------------------

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Standard normal deviate keyed on (seed, path, step, mode).
double keyed_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint64_t mode);
/// Process-wide count of keyed_normal calls (determinism audits).
std::uint64_t normal_draw_count();

class NoisePath {
 public:
  NoisePath(int steps, int modes, double tau, std::uint64_t seed, std::uint64_t path_index, std::vector<double> increments);

  int steps() const { return steps_; }
  int modes() const { return modes_; }
  double tau() const { return tau_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t path_index() const { return path_index_; }

  /// Increments of step m (0-based, i.e. Delta_{m+1} beta) for all modes.
  std::span<const double> step(int m) const;
  double increment(int m, int j) const { return increments_[static_cast<std::size_t>(m) * modes_ + j]; }
  std::span<const double> increments() const { return increments_; }

  friend bool operator==(const NoisePath&, const NoisePath&) = default;

 private:
  int steps_;
  int modes_;
  double tau_;
  std::uint64_t seed_;
  std::uint64_t path_index_;
  std::vector<double> increments_;
};

/// Draws M x J i.i.d. N(0, tau) increments. Entry (m, j) depends only on
/// (seed, path_index, m, j).
NoisePath sample_path(std::uint64_t seed, std::uint64_t path_index, int steps, double tau, int modes);

/// Sums consecutive groups of `factor` increments (left to right).
NoisePath coarsen_path(const NoisePath& path, int factor);

/// Raw dump: little-endian float64 increments, m-major then j.
void write_path(std::ostream& out, const NoisePath& path);

// Diffusion coefficient -------------------------------------------------------

/// Phi realised on the collocation grid of resolution n. Profiles are cached.
class Diffusion {
 public:
  Diffusion(DiffusionConfig config, int n);

  const DiffusionConfig& config() const { return config_; }
  const std::vector<NoiseBasisMode>& basis() const { return basis_; }
  int resolution() const { return n_; }

  /// sum_j Phi(u) e_j incr_j; a general (not solenoidal) field.
  SpectralField apply(const SpectralField& u, std::span<const double> incr) const;
  /// The individual fields Phi(u) e_j.
  std::vector<SpectralField> mode_fields(const SpectralField& u) const;
  /// (sum_j ||Phi(u) e_j||_{W^{order,2}}^2)^{1/2}, order in {0,1,2}.
  double hs_norm(const SpectralField& u, int order) const;
  /// ||Phi(u) - Phi(v)||_{L_2(U; L^2)}.
  double hs_distance(const SpectralField& u, const SpectralField& v) const;

  /// gamma lambda_j sigma_j(x), the scalar weight of mode j at a point.
  double weight(int j, const Vec3& x) const;
  /// The pointwise nonlinearity f (additive: the constant direction).
  Vec3 nonlinearity(const Vec3& u) const;
  bool is_zero() const { return config_.gamma == 0.0; }

 private:
  std::vector<double> weighted_sum(std::span<const double> incr) const;

  DiffusionConfig config_;
  int n_;
  std::vector<NoiseBasisMode> basis_;
  std::vector<std::vector<double>> profiles_;  // gamma lambda_j sigma_j on the grid
};

/// Convenience wrapper building a Diffusion for u's resolution.
SpectralField apply_diffusion(const DiffusionConfig& config, const SpectralField& u, std::span<const double> incr);
double diffusion_hs_norm(const DiffusionConfig& config, const SpectralField& u, int order);

// Numerical probes of the growth assumptions on Phi ------------------------------

struct LipschitzProbe {
  double worst_ratio = 0.0;  // max ||Phi(u) - Phi(v)||_{L_2(U;L^2)} / ||u - v||
  double bound = 0.0;        // gamma (sum_j lambda_j^2)^{1/2}
};

/// Random solenoidal pairs at resolution n, drawn from std::mt19937_64(seed).
LipschitzProbe lipschitz_probe(const DiffusionConfig& config, int n, std::uint64_t seed, int pairs = 50);

struct GrowthProbe {
  double constant = 0.0;  // max ||Phi(u)||_{L_2(U;W^{1,2})} / (1 + ||u||_{W^{1,2}})
  double slope = 0.0;     // fit of log ||Phi(u)|| against log(1 + ||u||)
};

/// Random solenoidal fields with L2 norms spread over four decades.
GrowthProbe growth_probe(const DiffusionConfig& config, int n, std::uint64_t seed, int samples = 40);

}  // namespace snslab
