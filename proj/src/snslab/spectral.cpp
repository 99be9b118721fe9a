#include "snslab/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace snslab {
namespace {

void check_resolution(int n) {
  if (n < 4 || n % 2 != 0) throw std::invalid_argument("spectral resolution must be even and >= 4, got " + std::to_string(n));
}

std::size_t cube(int n) { return static_cast<std::size_t>(n) * n * n; }

// Calls f(linear_index, k1, k2, k3) for every mode of an n^3 array.
template <class F>
void for_each_mode(int n, F&& f) {
  std::size_t idx = 0;
  for (int i1 = 0; i1 < n; ++i1) {
    const int k1 = wavenumber(i1, n);
    for (int i2 = 0; i2 < n; ++i2) {
      const int k2 = wavenumber(i2, n);
      for (int i3 = 0; i3 < n; ++i3, ++idx) f(idx, k1, k2, wavenumber(i3, n));
    }
  }
}

bool in_band(int n, int k1, int k2, int k3) {
  const int c = dealias_cutoff(n);
  return std::abs(k1) <= c && std::abs(k2) <= c && std::abs(k3) <= c;
}

// Derivative multiplier i*k along an axis; the Nyquist plane is dropped so
// that derivatives of real fields stay real.
Complex ik(int k, int n) { return k == -n / 2 ? Complex{} : Complex{0.0, static_cast<double>(k)}; }

std::vector<double> real_backward(int n, std::span<const Complex> coeffs) {
  std::vector<Complex> out(cube(n));
  fft_backward(n, coeffs, out);
  std::vector<double> values(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) values[i] = out[i].real();
  return values;
}

std::vector<Complex> real_forward(int n, std::span<const double> values) {
  std::vector<Complex> in(values.begin(), values.end());
  std::vector<Complex> out(in.size());
  fft_forward(n, in, out);
  const double scale = 1.0 / static_cast<double>(in.size());
  for (auto& c : out) c *= scale;
  return out;
}

void write_f64(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
}

double read_f64(std::istream& in) {
  std::uint64_t bits = 0;
  in.read(reinterpret_cast<char*>(&bits), sizeof bits);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  return std::bit_cast<double>(bits);
}

void write_u32(std::ostream& out, std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap32(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap32(v);
  return v;
}

}  // namespace

// Storage ---------------------------------------------------------------------

ScalarSpectralField::ScalarSpectralField(int n) : n_(n), coeffs_((check_resolution(n), cube(n))) {}

std::size_t ScalarSpectralField::index(int k1, int k2, int k3) const {
  return (static_cast<std::size_t>(fft_index(k1, n_)) * n_ + fft_index(k2, n_)) * n_ + fft_index(k3, n_);
}

SpectralField::SpectralField(int n) : n_(n) {
  check_resolution(n);
  for (auto& c : coeffs_) c.assign(cube(n), Complex{});
}

std::size_t SpectralField::index(int k1, int k2, int k3) const {
  return (static_cast<std::size_t>(fft_index(k1, n_)) * n_ + fft_index(k2, n_)) * n_ + fft_index(k3, n_);
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  if (other.n_ != n_) throw std::invalid_argument("resolution mismatch");
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < coeffs_[c].size(); ++i) coeffs_[c][i] += other.coeffs_[c][i];
  divergence_free_ = divergence_free_ && other.divergence_free_;
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  if (other.n_ != n_) throw std::invalid_argument("resolution mismatch");
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < coeffs_[c].size(); ++i) coeffs_[c][i] -= other.coeffs_[c][i];
  divergence_free_ = divergence_free_ && other.divergence_free_;
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (auto& comp : coeffs_)
    for (auto& c : comp) c *= s;
  return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

// Transforms ------------------------------------------------------------------

SpectralField from_grid(const VectorGrid& grid) {
  SpectralField out(grid.n);
  for (int c = 0; c < 3; ++c) {
    if (grid.values[c].size() != cube(grid.n)) throw std::invalid_argument("grid size mismatch");
    auto coeffs = real_forward(grid.n, grid.values[c]);
    std::copy(coeffs.begin(), coeffs.end(), out.component(c).begin());
  }
  return out;
}

VectorGrid to_grid(const SpectralField& field) {
  VectorGrid grid{field.n(), {}};
  for (int c = 0; c < 3; ++c) grid.values[c] = real_backward(field.n(), field.component(c));
  return grid;
}

ScalarSpectralField from_grid(const ScalarGrid& grid) {
  ScalarSpectralField out(grid.n);
  if (grid.values.size() != cube(grid.n)) throw std::invalid_argument("grid size mismatch");
  auto coeffs = real_forward(grid.n, grid.values);
  std::copy(coeffs.begin(), coeffs.end(), out.coeffs().begin());
  return out;
}

ScalarGrid to_grid(const ScalarSpectralField& field) {
  return ScalarGrid{field.n(), real_backward(field.n(), field.coeffs())};
}

Vec3 grid_point(int n, int i1, int i2, int i3) {
  const double h = kTwoPi / n;
  return {h * i1, h * i2, h * i3};
}

// Linear operators ------------------------------------------------------------

SpectralField leray_project(const SpectralField& v) {
  SpectralField out = v;
  const int n = v.n();
  for_each_mode(n, [&](std::size_t i, int k1, int k2, int k3) {
    const double kk = static_cast<double>(k1 * k1 + k2 * k2 + k3 * k3);
    if (kk == 0.0) return;
    const Complex kdotu = static_cast<double>(k1) * v.component(0)[i] + static_cast<double>(k2) * v.component(1)[i] +
                          static_cast<double>(k3) * v.component(2)[i];
    const Complex s = kdotu / kk;
    out.component(0)[i] -= static_cast<double>(k1) * s;
    out.component(1)[i] -= static_cast<double>(k2) * s;
    out.component(2)[i] -= static_cast<double>(k3) * s;
  });
  out.set_divergence_free(true);
  return out;
}

SpectralField gradient_part(const SpectralField& v) {
  SpectralField out = v - leray_project(v);
  out.set_divergence_free(false);
  return out;
}

ScalarSpectralField inv_laplacian(const ScalarSpectralField& s) {
  double norm2 = 0.0;
  for (const auto& c : s.coeffs()) norm2 += std::norm(c);
  if (std::abs(s.mean()) > 1e-12 * std::sqrt(norm2))
    throw std::invalid_argument("inv_laplacian: input has non-zero mean");
  ScalarSpectralField out(s.n());
  for_each_mode(s.n(), [&](std::size_t i, int k1, int k2, int k3) {
    const double kk = static_cast<double>(k1 * k1 + k2 * k2 + k3 * k3);
    if (kk != 0.0) out.coeffs()[i] = -s.coeffs()[i] / kk;
  });
  return out;
}

ScalarSpectralField laplacian(const ScalarSpectralField& s) {
  ScalarSpectralField out(s.n());
  for_each_mode(s.n(), [&](std::size_t i, int k1, int k2, int k3) {
    out.coeffs()[i] = -static_cast<double>(k1 * k1 + k2 * k2 + k3 * k3) * s.coeffs()[i];
  });
  return out;
}

ScalarSpectralField divergence(const SpectralField& v) {
  const int n = v.n();
  ScalarSpectralField out(n);
  for_each_mode(n, [&](std::size_t i, int k1, int k2, int k3) {
    out.coeffs()[i] = ik(k1, n) * v.component(0)[i] + ik(k2, n) * v.component(1)[i] + ik(k3, n) * v.component(2)[i];
  });
  return out;
}

SpectralField gradient(const ScalarSpectralField& s) {
  const int n = s.n();
  SpectralField out(n);
  for_each_mode(n, [&](std::size_t i, int k1, int k2, int k3) {
    out.component(0)[i] = ik(k1, n) * s.coeffs()[i];
    out.component(1)[i] = ik(k2, n) * s.coeffs()[i];
    out.component(2)[i] = ik(k3, n) * s.coeffs()[i];
  });
  return out;
}

SpectralField truncate_to_band(const SpectralField& v) {
  SpectralField out = v;
  const int n = v.n();
  for_each_mode(n, [&](std::size_t i, int k1, int k2, int k3) {
    if (!in_band(n, k1, k2, k3))
      for (int c = 0; c < 3; ++c) out.component(c)[i] = Complex{};
  });
  return out;
}

double divergence_defect(const SpectralField& v) {
  double worst = 0.0, largest = 0.0;
  for_each_mode(v.n(), [&](std::size_t i, int k1, int k2, int k3) {
    const Complex kdotu = static_cast<double>(k1) * v.component(0)[i] + static_cast<double>(k2) * v.component(1)[i] +
                          static_cast<double>(k3) * v.component(2)[i];
    double mag = 0.0;
    for (int c = 0; c < 3; ++c) mag += std::norm(v.component(c)[i]);
    worst = std::max(worst, std::abs(kdotu));
    largest = std::max(largest, std::sqrt(mag));
  });
  return largest == 0.0 ? 0.0 : worst / largest;
}

void symmetrize(SpectralField& v) {
  const int n = v.n();
  for (int c = 0; c < 3; ++c) {
    auto comp = v.component(c);
    std::vector<Complex> orig(comp.begin(), comp.end());
    for_each_mode(n, [&](std::size_t i, int k1, int k2, int k3) {
      const std::size_t j = v.index(-k1 == n / 2 ? k1 : -k1, -k2 == n / 2 ? k2 : -k2, -k3 == n / 2 ? k3 : -k3);
      comp[i] = 0.5 * (orig[i] + std::conj(orig[j]));
    });
  }
}

// Norms -----------------------------------------------------------------------

double sobolev_norm(const SpectralField& v, int order) {
  if (order < 0 || order > 3) throw std::invalid_argument("sobolev order must be in 0..3");
  double sum = 0.0;
  for_each_mode(v.n(), [&](std::size_t i, int k1, int k2, int k3) {
    const double w = std::pow(1.0 + k1 * k1 + k2 * k2 + k3 * k3, order);
    sum += w * (std::norm(v.component(0)[i]) + std::norm(v.component(1)[i]) + std::norm(v.component(2)[i]));
  });
  return std::sqrt(kTorusVolume * sum);
}

double sobolev_norm(const ScalarSpectralField& s, int order) {
  if (order < 0 || order > 3) throw std::invalid_argument("sobolev order must be in 0..3");
  double sum = 0.0;
  for_each_mode(s.n(), [&](std::size_t i, int k1, int k2, int k3) {
    sum += std::pow(1.0 + k1 * k1 + k2 * k2 + k3 * k3, order) * std::norm(s.coeffs()[i]);
  });
  return std::sqrt(kTorusVolume * sum);
}

double gradient_l2_norm(const SpectralField& v) {
  const int n = v.n();
  double sum = 0.0;
  for_each_mode(n, [&](std::size_t i, int k1, int k2, int k3) {
    const double kk = std::norm(ik(k1, n)) + std::norm(ik(k2, n)) + std::norm(ik(k3, n));
    sum += kk * (std::norm(v.component(0)[i]) + std::norm(v.component(1)[i]) + std::norm(v.component(2)[i]));
  });
  return std::sqrt(kTorusVolume * sum);
}

double l2_inner(const SpectralField& a, const SpectralField& b) {
  if (a.n() != b.n()) throw std::invalid_argument("resolution mismatch");
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    auto x = a.component(c);
    auto y = b.component(c);
    for (std::size_t i = 0; i < x.size(); ++i) sum += (std::conj(x[i]) * y[i]).real();
  }
  return kTorusVolume * sum;
}

// Nonlinear terms ---------------------------------------------------------------

SpectralField convect(const SpectralField& u, const SpectralField& v) {
  if (u.n() != v.n()) throw std::invalid_argument("convect: resolution mismatch");
  const int n = u.n();
  const SpectralField ub = truncate_to_band(u);
  const SpectralField vb = truncate_to_band(v);
  const VectorGrid ug = to_grid(ub);
  VectorGrid out{n, {}};
  for (int i = 0; i < 3; ++i) out.values[i].assign(cube(n), 0.0);
  std::vector<Complex> dv(cube(n));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for_each_mode(n, [&](std::size_t idx, int k1, int k2, int k3) {
        const int kj = j == 0 ? k1 : (j == 1 ? k2 : k3);
        dv[idx] = ik(kj, n) * vb.component(i)[idx];
      });
      const auto grad = real_backward(n, dv);
      for (std::size_t p = 0; p < grad.size(); ++p) out.values[i][p] += ug.values[j][p] * grad[p];
    }
  }
  return truncate_to_band(from_grid(out));
}

std::array<std::vector<Complex>, 9> tensor_product(const SpectralField& a, const SpectralField& b) {
  if (a.n() != b.n()) throw std::invalid_argument("tensor_product: resolution mismatch");
  const int n = a.n();
  const VectorGrid ag = to_grid(truncate_to_band(a));
  const VectorGrid bg = to_grid(truncate_to_band(b));
  std::array<std::vector<Complex>, 9> out;
  std::vector<double> prod(cube(n));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      for (std::size_t p = 0; p < prod.size(); ++p) prod[p] = ag.values[i][p] * bg.values[j][p];
      out[3 * i + j] = real_forward(n, prod);
      for_each_mode(n, [&](std::size_t idx, int k1, int k2, int k3) {
        if (!in_band(n, k1, k2, k3)) out[3 * i + j][idx] = Complex{};
      });
    }
  return out;
}

// Point evaluation ----------------------------------------------------------------

std::vector<Vec3> evaluate_at_points(const SpectralField& v, std::span<const Vec3> points) {
  const int n = v.n();
  std::vector<Vec3> out(points.size());
  std::vector<Complex> e1(n), e2(n), e3(n);
  for (std::size_t p = 0; p < points.size(); ++p) {
    const Vec3& x = points[p];
    for (int i = 0; i < n; ++i) {
      const double k = wavenumber(i, n);
      e1[i] = std::polar(1.0, k * x[0]);
      e2[i] = std::polar(1.0, k * x[1]);
      e3[i] = std::polar(1.0, k * x[2]);
    }
    Vec3 value{};
    for (int c = 0; c < 3; ++c) {
      auto coeffs = v.component(c);
      Complex sum{};
      std::size_t idx = 0;
      for (int i1 = 0; i1 < n; ++i1) {
        Complex s2{};
        for (int i2 = 0; i2 < n; ++i2) {
          Complex s3{};
          for (int i3 = 0; i3 < n; ++i3, ++idx) s3 += coeffs[idx] * e3[i3];
          s2 += s3 * e2[i2];
        }
        sum += s2 * e1[i1];
      }
      value[c] = sum.real();
    }
    out[p] = value;
  }
  return out;
}

std::vector<std::vector<PointJet>> evaluate_on_lattices(const SpectralField& v, std::span<const Vec3> offsets,
                                                        int m) {
  const int n = v.n();
  const std::size_t lattice = static_cast<std::size_t>(m) * m * m;

  // Populated modes only. +n/2 has no slot of its own (the Nyquist plane is
  // stored as -n/2), so only k < n/2 is visited.
  struct Mode {
    int k[3];
    int residue;  // row-major (k1 mod m, k2 mod m, k3 mod m)
    Complex coeff[3];
    Complex ik[3];
  };
  std::vector<Mode> modes;
  int kmax = 0;
  const auto mod = [m](int k) { return ((k % m) + m) % m; };
  for_each_mode(n, [&](std::size_t i, int k1, int k2, int k3) {
    Mode md{{k1, k2, k3}, (mod(k1) * m + mod(k2)) * m + mod(k3), {}, {ik(k1, n), ik(k2, n), ik(k3, n)}};
    bool any = false;
    for (int c = 0; c < 3; ++c) {
      md.coeff[c] = v.component(c)[i];
      any = any || md.coeff[c] != Complex{};
    }
    if (!any) return;
    kmax = std::max({kmax, std::abs(k1), std::abs(k2), std::abs(k3)});
    modes.push_back(md);
  });
  const int width = 2 * kmax + 1;

  // twiddle[r][a] = exp(2pi i r a / m)
  std::vector<Complex> twiddle(static_cast<std::size_t>(m) * m);
  for (int r = 0; r < m; ++r)
    for (int a = 0; a < m; ++a) twiddle[r * m + a] = std::polar(1.0, kTwoPi * ((r * a) % m) / m);

  // Twelve scalar series per lattice: value of component c, then d_j of c.
  // On the lattice, exp(ik.x) only depends on k mod m once the offset phase is
  // applied, so modes are folded into m^3 residue bins and a small DFT follows.
  constexpr int kSeries = 12;
  std::vector<std::vector<PointJet>> result;
  result.reserve(offsets.size());
  std::vector<Complex> fold(kSeries * lattice), tmp(kSeries * lattice);
  std::array<std::vector<Complex>, 3> phase;
  for (auto& p : phase) p.resize(width);
  for (const Vec3& offset : offsets) {
    for (int ax = 0; ax < 3; ++ax)
      for (int k = -kmax; k <= kmax; ++k) phase[ax][k + kmax] = std::polar(1.0, k * offset[ax]);
    std::fill(fold.begin(), fold.end(), Complex{});
    for (const Mode& md : modes) {
      const Complex ph = phase[0][md.k[0] + kmax] * phase[1][md.k[1] + kmax] * phase[2][md.k[2] + kmax];
      Complex* bin = &fold[static_cast<std::size_t>(md.residue) * kSeries];
      for (int c = 0; c < 3; ++c) {
        const Complex val = md.coeff[c] * ph;
        bin[c * 4] += val;
        for (int d = 0; d < 3; ++d) bin[c * 4 + 1 + d] += val * md.ik[d];
      }
    }
    // Residue r -> lattice index a along each axis in turn; the axis being
    // transformed is the slowest one, then the indices rotate.
    Complex* src = fold.data();
    Complex* dst = tmp.data();
    const std::size_t inner = static_cast<std::size_t>(m) * m;
    for (int pass = 0; pass < 3; ++pass) {
      for (int a = 0; a < m; ++a)
        for (std::size_t j = 0; j < inner; ++j) {
          Complex acc[kSeries] = {};
          for (int r = 0; r < m; ++r) {
            const Complex w = twiddle[r * m + a];
            const Complex* in = src + (r * inner + j) * kSeries;
            for (int s = 0; s < kSeries; ++s) acc[s] += in[s] * w;
          }
          // (a, j) -> (j, a): the next pass sees the next axis first.
          Complex* o = dst + (j * m + a) * kSeries;
          for (int s = 0; s < kSeries; ++s) o[s] = acc[s];
        }
      std::swap(src, dst);
    }
    std::vector<PointJet> out(lattice);
    for (std::size_t i = 0; i < lattice; ++i) {
      const Complex* in = src + i * kSeries;
      for (int c = 0; c < 3; ++c) {
        out[i].value[c] = in[c * 4].real();
        for (int d = 0; d < 3; ++d) out[i].grad[c][d] = in[c * 4 + 1 + d].real();
      }
    }
    result.push_back(std::move(out));
  }
  return result;
}

std::vector<PointJet> evaluate_on_lattice(const SpectralField& v, const Vec3& offset, int m) {
  return std::move(evaluate_on_lattices(v, std::span<const Vec3>(&offset, 1), m).front());
}

// Construction helpers ----------------------------------------------------------

SpectralField shear_mode(int n, double amplitude) {
  SpectralField f(n);
  // sin(x1) = (e^{ix1} - e^{-ix1}) / 2i
  f.at(1, 1, 0, 0) = Complex{0.0, -0.5 * amplitude};
  f.at(1, -1, 0, 0) = Complex{0.0, 0.5 * amplitude};
  f.set_divergence_free(true);
  return f;
}

SpectralField constant_field(int n, const Vec3& value) {
  SpectralField f(n);
  for (int c = 0; c < 3; ++c) f.at(c, 0, 0, 0) = value[c];
  f.set_divergence_free(true);
  return f;
}

SpectralField random_field(int n, std::mt19937_64& rng, int kmax, double decay, double l2_norm) {
  SpectralField f(n);
  kmax = std::min(kmax, dealias_cutoff(n));
  std::normal_distribution<double> normal;
  for (int k1 = -kmax; k1 <= kmax; ++k1)
    for (int k2 = -kmax; k2 <= kmax; ++k2)
      for (int k3 = -kmax; k3 <= kmax; ++k3) {
        const double amp = std::pow(1.0 + k1 * k1 + k2 * k2 + k3 * k3, -0.5 * decay);
        for (int c = 0; c < 3; ++c) f.at(c, k1, k2, k3) = amp * Complex{normal(rng), normal(rng)};
      }
  symmetrize(f);
  for (int c = 0; c < 3; ++c) f.at(c, 0, 0, 0) = f.at(c, 0, 0, 0).real();
  const double norm = sobolev_norm(f, 0);
  if (norm > 0.0) f *= l2_norm / norm;
  f.set_divergence_free(false);
  return f;
}

SpectralField random_divfree_field(int n, std::mt19937_64& rng, int kmax, double decay, double l2_norm) {
  SpectralField f = leray_project(random_field(n, rng, kmax, decay, 1.0));
  const double norm = sobolev_norm(f, 0);
  if (norm > 0.0) f *= l2_norm / norm;
  return f;
}

// Snapshots ----------------------------------------------------------------------

void write_snapshot(std::ostream& out, const SpectralField& v) {
  out.write("SNSF", 4);
  write_u32(out, 1);
  write_u32(out, static_cast<std::uint32_t>(v.n()));
  write_u32(out, v.divergence_free() ? 1u : 0u);
  const int n = v.n();
  for (int k1 = -n / 2; k1 < n / 2; ++k1)
    for (int k2 = -n / 2; k2 < n / 2; ++k2)
      for (int k3 = -n / 2; k3 < n / 2; ++k3)
        for (int c = 0; c < 3; ++c) {
          const Complex z = v.at(c, k1, k2, k3);
          write_f64(out, z.real());
          write_f64(out, z.imag());
        }
  if (!out) throw std::runtime_error("snapshot write failed");
}

SpectralField read_snapshot(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "SNSF", 4) != 0) throw std::runtime_error("not a field snapshot");
  if (read_u32(in) != 1) throw std::runtime_error("unsupported snapshot version");
  const int n = static_cast<int>(read_u32(in));
  const std::uint32_t flags = read_u32(in);
  SpectralField v(n);
  for (int k1 = -n / 2; k1 < n / 2; ++k1)
    for (int k2 = -n / 2; k2 < n / 2; ++k2)
      for (int k3 = -n / 2; k3 < n / 2; ++k3)
        for (int c = 0; c < 3; ++c) {
          const double re = read_f64(in);
          const double im = read_f64(in);
          v.at(c, k1, k2, k3) = Complex{re, im};
        }
  if (!in) throw std::runtime_error("truncated snapshot");
  v.set_divergence_free((flags & 1u) != 0);
  return v;
}

}  // namespace snslab
