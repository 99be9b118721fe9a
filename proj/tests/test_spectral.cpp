#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "snslab/noise.hpp"
#include "snslab/pressure.hpp"
#include "snslab/spectral.hpp"

using namespace snslab;

namespace {

double max_abs_diff(const SpectralField& a, const SpectralField& b) {
  double m = 0.0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < a.modes(); ++i) m = std::max(m, std::abs(a.component(c)[i] - b.component(c)[i]));
  return m;
}

double max_abs(const SpectralField& a) { return max_abs_diff(a, SpectralField(a.n())); }

VectorGrid sample(int n, auto&& f) {
  VectorGrid g{n, {}};
  for (auto& v : g.values) v.resize(static_cast<std::size_t>(n) * n * n);
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k, ++idx) {
        const Vec3 v = f(grid_point(n, i, j, k));
        for (int c = 0; c < 3; ++c) g.values[c][idx] = v[c];
      }
  return g;
}

}  // namespace

TEST_CASE("from_grid: constant and single sine mode") {
  auto c = from_grid(sample(8, [](const Vec3&) { return Vec3{1.0, 0.0, 0.0}; }));
  CHECK(std::abs(c.at(0, 0, 0, 0) - Complex{1.0, 0.0}) < 1e-15);
  SpectralField expect = constant_field(8, {1.0, 0.0, 0.0});
  CHECK(max_abs_diff(c, expect) < 1e-15);

  auto s = from_grid(sample(8, [](const Vec3& x) { return Vec3{0.0, std::sin(x[0]), 0.0}; }));
  CHECK(std::abs(s.at(1, 1, 0, 0) - Complex{0.0, -0.5}) < 1e-15);
  CHECK(std::abs(s.at(1, -1, 0, 0) - Complex{0.0, 0.5}) < 1e-15);
  CHECK(max_abs_diff(s, shear_mode(8, 1.0)) < 1e-15);
}

TEST_CASE("from_grid/to_grid round trip and Parseval") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  const int n = 16;
  VectorGrid g = sample(n, [&](const Vec3&) { return Vec3{normal(rng), normal(rng), normal(rng)}; });
  const SpectralField f = from_grid(g);
  const VectorGrid back = to_grid(f);
  double err = 0.0, scale = 0.0, grid_energy = 0.0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < g.values[c].size(); ++i) {
      err = std::max(err, std::abs(back.values[c][i] - g.values[c][i]));
      scale = std::max(scale, std::abs(g.values[c][i]));
      grid_energy += g.values[c][i] * g.values[c][i];
    }
  CHECK(err / scale < 1e-12);
  const double l2_grid = kTorusVolume * grid_energy / (n * n * n);
  const double l2_spec = std::pow(sobolev_norm(f, 0), 2);
  CHECK(std::abs(l2_grid - l2_spec) / l2_grid < 1e-12);
}

TEST_CASE("odd or tiny resolutions are rejected") {
  CHECK_THROWS_AS(SpectralField(7), std::invalid_argument);
  CHECK_THROWS_AS(SpectralField(2), std::invalid_argument);
}

TEST_CASE("leray projection laws") {
  const int n = 16;
  // grad(-cos x1) = sin(x1) e1
  auto grad = from_grid(sample(n, [](const Vec3& x) { return Vec3{std::sin(x[0]), 0.0, 0.0}; }));
  CHECK(max_abs(leray_project(grad)) < 1e-15);

  const SpectralField shear = shear_mode(n, 1.0);
  CHECK(max_abs_diff(leray_project(shear), shear) < 1e-15);

  std::mt19937_64 rng(11);
  const SpectralField v = random_field(n, rng, 5, 1.0, 1.0);
  const SpectralField w = random_field(n, rng, 5, 1.0, 1.0);
  const SpectralField pv = leray_project(v);
  CHECK(max_abs_diff(leray_project(pv), pv) < 1e-14);
  CHECK(divergence_defect(pv) < 1e-12);
  CHECK(pv.divergence_free());
  // self-adjoint
  const double lhs = l2_inner(pv, w), rhs = l2_inner(v, leray_project(w));
  CHECK(std::abs(lhs - rhs) < 1e-12 * (std::abs(lhs) + 1.0));
  // mean mode untouched
  CHECK(std::abs(pv.at(0, 0, 0, 0) - v.at(0, 0, 0, 0)) == 0.0);
}

TEST_CASE("inverse laplacian") {
  const int n = 8;
  ScalarGrid g{n, std::vector<double>(n * n * n)};
  ScalarGrid h{n, std::vector<double>(n * n * n)};
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k, ++idx) {
        const Vec3 x = grid_point(n, i, j, k);
        g.values[idx] = std::sin(x[0]);
        h.values[idx] = std::cos(2.0 * x[1]);
      }
  auto a = to_grid(inv_laplacian(from_grid(g)));
  auto b = to_grid(inv_laplacian(from_grid(h)));
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    CHECK(std::abs(a.values[i] + g.values[i]) < 1e-14);
    CHECK(std::abs(b.values[i] + h.values[i] / 4.0) < 1e-14);
  }

  ScalarGrid one{n, std::vector<double>(n * n * n, 1.0)};
  CHECK_THROWS_AS(inv_laplacian(from_grid(one)), std::invalid_argument);

  // two-sided inverse on a random zero-mean field
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  ScalarGrid r{16, std::vector<double>(16 * 16 * 16)};
  for (auto& v : r.values) v = normal(rng);
  ScalarSpectralField s = from_grid(r);
  s.coeffs()[0] = 0.0;
  const auto s1 = laplacian(inv_laplacian(s));
  const auto s2 = inv_laplacian(laplacian(s));
  double e1 = 0.0, e2 = 0.0, sc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    e1 = std::max(e1, std::abs(s1.coeffs()[i] - s.coeffs()[i]));
    e2 = std::max(e2, std::abs(s2.coeffs()[i] - s.coeffs()[i]));
    sc = std::max(sc, std::abs(s.coeffs()[i]));
  }
  CHECK(e1 / sc < 1e-12);
  CHECK(e2 / sc < 1e-12);
}

TEST_CASE("sobolev norms") {
  CHECK(sobolev_norm(SpectralField(8), 2) == 0.0);
  const SpectralField s = shear_mode(8, 1.0);
  CHECK(sobolev_norm(s, 0) == doctest::Approx(std::sqrt(kTorusVolume / 2.0)).epsilon(1e-14));
  CHECK(sobolev_norm(s, 1) == doctest::Approx(std::pow(kTwoPi, 1.5)).epsilon(1e-14));
  CHECK_THROWS_AS(sobolev_norm(s, 4), std::invalid_argument);

  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const SpectralField v = random_field(16, rng, 5, 0.5, 1.0 + t);
    for (int k = 0; k < 3; ++k) CHECK(sobolev_norm(v, k) <= sobolev_norm(v, k + 1));
  }
}

TEST_CASE("convect") {
  const int n = 16;
  const SpectralField u = constant_field(n, {1.0, 0.0, 0.0});
  const SpectralField v = shear_mode(n, 1.0);
  const SpectralField expect = from_grid(sample(n, [](const Vec3& x) { return Vec3{0.0, std::cos(x[0]), 0.0}; }));
  CHECK(max_abs_diff(convect(u, v), expect) < 1e-14);

  const SpectralField c = constant_field(n, {0.3, -1.0, 2.0});
  std::mt19937_64 rng(9);
  CHECK(max_abs(convect(random_divfree_field(n, rng, 5, 1.0, 1.0), c)) < 1e-14);

  SUBCASE("single-mode product inside the band is exact") {
    // u = sin(x2) e1, v = cos(x1) e3: (u.grad) v = -sin(x2) sin(x1) e3
    const SpectralField uu = from_grid(sample(n, [](const Vec3& x) { return Vec3{std::sin(x[1]), 0.0, 0.0}; }));
    const SpectralField vv = from_grid(sample(n, [](const Vec3& x) { return Vec3{0.0, 0.0, std::cos(x[0])}; }));
    const SpectralField ex = from_grid(sample(n, [](const Vec3& x) { return Vec3{0.0, 0.0, -std::sin(x[1]) * std::sin(x[0])}; }));
    CHECK(max_abs_diff(convect(uu, vv), ex) < 1e-14);
  }

  SUBCASE("resolution mismatch") { CHECK_THROWS_AS(convect(SpectralField(8), SpectralField(16)), std::invalid_argument); }
}

TEST_CASE("convect is skew-symmetric for solenoidal fields (brute-force quadrature)") {
  const int n = 8;  // retained band |k_i| <= 2
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 3; ++trial) {
    const SpectralField u = random_divfree_field(n, rng, 2, 0.0, 1.0);
    const SpectralField v = random_divfree_field(n, rng, 2, 0.0, 1.0);
    // Independent quadrature on a 16^3 grid (exact for trigonometric degree < 16).
    const int q = 16;
    std::vector<Vec3> pts;
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j)
        for (int k = 0; k < q; ++k) pts.push_back(grid_point(q, i, j, k));
    const auto uv = evaluate_at_points(u, pts);
    const auto vv = evaluate_at_points(v, pts);
    std::array<std::vector<Vec3>, 3> dv;
    for (int d = 0; d < 3; ++d) {
      SpectralField g(n);
      for (int c = 0; c < 3; ++c)
        for (int i1 = 0; i1 < n; ++i1)
          for (int i2 = 0; i2 < n; ++i2)
            for (int i3 = 0; i3 < n; ++i3) {
              const int k[3] = {wavenumber(i1, n), wavenumber(i2, n), wavenumber(i3, n)};
              g.at(c, k[0], k[1], k[2]) = Complex{0.0, static_cast<double>(k[d])} * v.at(c, k[0], k[1], k[2]);
            }
      dv[d] = evaluate_at_points(g, pts);
    }
    double brute = 0.0;
    for (std::size_t p = 0; p < pts.size(); ++p)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) brute += uv[p][d] * dv[d][p][c] * vv[p][c];
    brute *= kTorusVolume / static_cast<double>(pts.size());
    CHECK(std::abs(brute) < 1e-11);
    CHECK(std::abs(l2_inner(convect(u, v), v)) < 1e-11);
  }
}

TEST_CASE("point evaluation") {
  const SpectralField s = shear_mode(8, 1.0);
  const Vec3 p{M_PI / 2.0, 0.0, 0.0};
  const auto val = evaluate_at_points(s, std::span<const Vec3>(&p, 1));
  CHECK(std::abs(val[0][0]) < 1e-15);
  CHECK(val[0][1] == doctest::Approx(1.0).epsilon(1e-15));

  std::mt19937_64 rng(1);
  const SpectralField v = random_field(8, rng, 4, 0.0, 1.0);
  const VectorGrid g = to_grid(v);
  std::vector<Vec3> pts;
  for (int i = 0; i < 8; ++i) pts.push_back(grid_point(8, i, (3 * i) % 8, (5 * i + 1) % 8));
  const auto vals = evaluate_at_points(v, pts);
  for (int i = 0; i < 8; ++i) {
    const std::size_t idx = (static_cast<std::size_t>(i) * 8 + (3 * i) % 8) * 8 + (5 * i + 1) % 8;
    for (int c = 0; c < 3; ++c) CHECK(std::abs(vals[i][c] - g.values[c][idx]) < 1e-12);
  }

  const SpectralField c = constant_field(8, {1.5, -2.0, 0.25});
  std::uniform_real_distribution<double> unif(0.0, kTwoPi);
  std::vector<Vec3> rnd(100);
  for (auto& x : rnd) x = {unif(rng), unif(rng), unif(rng)};
  for (const auto& x : evaluate_at_points(c, rnd)) {
    CHECK(x[0] == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(x[1] == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(x[2] == doctest::Approx(0.25).epsilon(1e-14));
  }
}

TEST_CASE("lattice evaluation agrees with pointwise evaluation") {
  std::mt19937_64 rng(2);
  const SpectralField v = random_field(16, rng, 5, 1.0, 1.0);
  const Vec3 off{0.1, 0.7, 1.3};
  const int m = 3;
  const auto jets = evaluate_on_lattice(v, off, m);
  std::vector<Vec3> pts;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c)
        pts.push_back({off[0] + kTwoPi * a / m, off[1] + kTwoPi * b / m, off[2] + kTwoPi * c / m});
  const auto vals = evaluate_at_points(v, pts);
  for (std::size_t p = 0; p < pts.size(); ++p)
    for (int c = 0; c < 3; ++c) CHECK(std::abs(jets[p].value[c] - vals[p][c]) < 1e-12);
  // gradient by central differences
  const double h = 1e-5;
  for (int d = 0; d < 3; ++d) {
    std::vector<Vec3> plus = pts, minus = pts;
    for (auto& x : plus) x[d] += h;
    for (auto& x : minus) x[d] -= h;
    const auto fp = evaluate_at_points(v, plus), fm = evaluate_at_points(v, minus);
    for (std::size_t p = 0; p < pts.size(); ++p)
      for (int c = 0; c < 3; ++c) CHECK(std::abs(jets[p].grad[c][d] - (fp[p][c] - fm[p][c]) / (2 * h)) < 1e-6);
  }
}

TEST_CASE("pressure decomposition") {
  const int n = 16;
  Diffusion diffusion({NoiseKind::additive, 2.0, 0.5, 8}, n);

  SUBCASE("zero velocity") {
    SpectralField zero(n);
    zero.set_divergence_free(true);
    const auto pd = pressure_decompose(zero, diffusion);
    for (const auto& c : pd.deterministic.coeffs()) CHECK(std::abs(c) == 0.0);
    const auto fields = diffusion.mode_fields(SpectralField(n));
    for (std::size_t j = 0; j < fields.size(); ++j) CHECK(max_abs_diff(pd.noise[j], gradient_part(fields[j])) < 1e-15);
  }

  SUBCASE("shear mode has no convective pressure") {
    SpectralField u = shear_mode(n, 1.0);
    // brute force: divergence of the dealiased product vanishes identically
    const auto div = divergence(convect(u, u));
    for (const auto& c : div.coeffs()) CHECK(std::abs(c) < 1e-15);
    const auto pd = pressure_decompose(u, diffusion);
    for (const auto& c : pd.deterministic.coeffs()) CHECK(std::abs(c) < 1e-15);
  }

  SUBCASE("noise pressure fields are gradients") {
    std::mt19937_64 rng(4);
    Diffusion mult({NoiseKind::multiplicative, 2.0, 0.5, 8}, n);
    const SpectralField u = random_divfree_field(n, rng, 5, 2.0, 1.0);
    const auto pd = pressure_decompose(u, mult);
    CHECK(std::abs(pd.deterministic.mean()) == 0.0);
    for (const auto& f : pd.noise) CHECK(max_abs(leray_project(f)) < 1e-11);
    CHECK(std::isfinite(noise_pressure_hs_norm(pd.noise)));
  }

  SUBCASE("rejects non-solenoidal velocity") {
    std::mt19937_64 rng(8);
    CHECK_THROWS_AS(pressure_decompose(random_field(n, rng, 5, 1.0, 1.0), diffusion), std::invalid_argument);
  }
}

TEST_CASE("snapshot round trip") {
  std::mt19937_64 rng(12);
  const SpectralField v = random_divfree_field(8, rng, 2, 1.0, 1.0);
  std::stringstream ss;
  write_snapshot(ss, v);
  CHECK(ss.str().size() == 16 + 8 * 8 * 8 * 3 * 16);
  const SpectralField back = read_snapshot(ss);
  CHECK(back == v);
}
