#pragma once

// Fourier representation of velocity and scalar fields on the torus [0,2pi)^3.
//
// Coefficients are stored in FFT order on an N^3 array: index i along an axis
// carries wavenumber i for i < N/2 and i - N otherwise (the Nyquist plane is
// k = -N/2). Coefficients are normalised so that u(x) = sum_k u_k e^{i k.x},
// i.e. the zero mode is the mean value.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "snslab/fft.hpp"

namespace snslab {

using Vec3 = std::array<double, 3>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
/// (2pi)^3, the volume of the torus.
inline constexpr double kTorusVolume = kTwoPi * kTwoPi * kTwoPi;

/// Wavenumber carried by FFT index i on an axis of length n.
constexpr int wavenumber(int i, int n) { return i < n / 2 ? i : i - n; }
/// FFT index of wavenumber k on an axis of length n.
constexpr int fft_index(int k, int n) { return k >= 0 ? k : k + n; }
/// Largest retained |k_i| under the 2/3 rule (strictly below n/3).
constexpr int dealias_cutoff(int n) { return (n - 1) / 3; }

/// Real samples of a scalar on the collocation grid x = 2pi*(i1,i2,i3)/n.
struct ScalarGrid {
  int n = 0;
  std::vector<double> values;
};

/// Three real component grids.
struct VectorGrid {
  int n = 0;
  std::array<std::vector<double>, 3> values;
};

class ScalarSpectralField {
 public:
  ScalarSpectralField() = default;
  explicit ScalarSpectralField(int n);

  int n() const { return n_; }
  std::size_t size() const { return coeffs_.size(); }
  std::span<Complex> coeffs() { return coeffs_; }
  std::span<const Complex> coeffs() const { return coeffs_; }

  Complex& at(int k1, int k2, int k3) { return coeffs_[index(k1, k2, k3)]; }
  const Complex& at(int k1, int k2, int k3) const { return coeffs_[index(k1, k2, k3)]; }
  const Complex& mean() const { return coeffs_[0]; }

  std::size_t index(int k1, int k2, int k3) const;

 private:
  int n_ = 0;
  std::vector<Complex> coeffs_;
};

class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(int n);

  int n() const { return n_; }
  std::size_t modes() const { return coeffs_[0].size(); }
  std::span<Complex> component(int c) { return coeffs_[c]; }
  std::span<const Complex> component(int c) const { return coeffs_[c]; }

  Complex& at(int c, int k1, int k2, int k3) { return coeffs_[c][index(k1, k2, k3)]; }
  const Complex& at(int c, int k1, int k2, int k3) const { return coeffs_[c][index(k1, k2, k3)]; }

  bool divergence_free() const { return divergence_free_; }
  void set_divergence_free(bool flag) { divergence_free_ = flag; }

  std::size_t index(int k1, int k2, int k3) const;

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double s);

  friend bool operator==(const SpectralField&, const SpectralField&) = default;

 private:
  int n_ = 0;
  std::array<std::vector<Complex>, 3> coeffs_;
  bool divergence_free_ = false;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

// Transforms -----------------------------------------------------------------

SpectralField from_grid(const VectorGrid& grid);
VectorGrid to_grid(const SpectralField& field);
ScalarSpectralField from_grid(const ScalarGrid& grid);
ScalarGrid to_grid(const ScalarSpectralField& field);

/// Collocation point of grid index (i1,i2,i3).
Vec3 grid_point(int n, int i1, int i2, int i3);

// Linear operators -----------------------------------------------------------

/// Leray projection u_k - k (k.u_k)/|k|^2; the mean mode is left unchanged.
SpectralField leray_project(const SpectralField& v);
/// Complement of the Leray projection: the gradient part of v.
SpectralField gradient_part(const SpectralField& v);
/// Solves the periodic Poisson problem; rejects inputs with non-zero mean.
ScalarSpectralField inv_laplacian(const ScalarSpectralField& s);
ScalarSpectralField laplacian(const ScalarSpectralField& s);
ScalarSpectralField divergence(const SpectralField& v);
SpectralField gradient(const ScalarSpectralField& s);
/// Zeroes every mode with some |k_i| > dealias_cutoff(n).
SpectralField truncate_to_band(const SpectralField& v);
/// max_k |k.u_k| / max_k |u_k| (0 for the zero field).
double divergence_defect(const SpectralField& v);
/// Restores exact Hermitian symmetry by averaging u_k with conj(u_{-k}).
void symmetrize(SpectralField& v);

// Norms ----------------------------------------------------------------------
//
// W^{k,2} norms use the Bessel-potential multiplier:
//   ||v||_k^2 = (2pi)^3 sum_k (1+|k|^2)^order |v_k|^2,
// which is equivalent to the classical Sobolev norm on the torus.

double sobolev_norm(const SpectralField& v, int order);
double sobolev_norm(const ScalarSpectralField& s, int order);
/// ||grad v||_{L^2}.
double gradient_l2_norm(const SpectralField& v);
/// L^2 inner product (real fields).
double l2_inner(const SpectralField& a, const SpectralField& b);

// Nonlinear terms ------------------------------------------------------------

/// (u.grad) v, pseudo-spectral with 2/3-rule dealiasing of both inputs and
/// the product; the result lives in the retained band.
SpectralField convect(const SpectralField& u, const SpectralField& v);

/// Pseudo-spectral tensor product T_ij = a_i b_j of band-truncated inputs,
/// returned as nine coefficient arrays (row-major i,j).
std::array<std::vector<Complex>, 9> tensor_product(const SpectralField& a, const SpectralField& b);

// Point evaluation -----------------------------------------------------------

/// Exact evaluation of the truncated Fourier series at arbitrary points.
std::vector<Vec3> evaluate_at_points(const SpectralField& v, std::span<const Vec3> points);

/// Values of v and of its gradient, grad[i][j] = d_j v_i.
struct PointJet {
  Vec3 value{};
  std::array<Vec3, 3> grad{};
};

/// Evaluates v and grad v on the lattice offset + (2pi/m)(a,b,c), a,b,c in
/// [0,m), returned in row-major lattice order.
std::vector<PointJet> evaluate_on_lattice(const SpectralField& v, const Vec3& offset, int m);
/// Same for several offsets; the mode scan is shared.
std::vector<std::vector<PointJet>> evaluate_on_lattices(const SpectralField& v, std::span<const Vec3> offsets, int m);

// Construction helpers -------------------------------------------------------

/// a sin(x1) e2, the shear mode used throughout the tests.
SpectralField shear_mode(int n, double amplitude);
/// Constant field.
SpectralField constant_field(int n, const Vec3& value);
/// Random divergence-free field with |u_k| ~ (1+|k|^2)^{-decay/2} on
/// |k_i| <= kmax, normalised to the requested L^2 norm.
SpectralField random_divfree_field(int n, std::mt19937_64& rng, int kmax, double decay, double l2_norm);
/// Random field without the divergence constraint, same spectrum shape.
SpectralField random_field(int n, std::mt19937_64& rng, int kmax, double decay, double l2_norm);

// Snapshots ------------------------------------------------------------------
//
// Binary layout: "SNSF" magic, uint32 version (1), int32 N, uint32 flags
// (bit 0: divergence-free), then for every k in lexicographic order
// (k1, k2, k3 each ascending from -N/2 to N/2-1) the three complex
// coefficients as little-endian float64 pairs (re, im).

void write_snapshot(std::ostream& out, const SpectralField& v);
SpectralField read_snapshot(std::istream& in);

}  // namespace snslab
