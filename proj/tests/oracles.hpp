#pragma once

// Independent reference implementations shared by the unit tests and the
// acceptance binary.

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>

#include "snslab/spectral.hpp"

namespace snslab::oracle {

inline bool bit_equal(const SpectralField& a, const SpectralField& b) {
  if (a.n() != b.n()) return false;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < a.modes(); ++i) {
      if (std::bit_cast<std::uint64_t>(a.component(c)[i].real()) != std::bit_cast<std::uint64_t>(b.component(c)[i].real()))
        return false;
      if (std::bit_cast<std::uint64_t>(a.component(c)[i].imag()) != std::bit_cast<std::uint64_t>(b.component(c)[i].imag()))
        return false;
    }
  return true;
}

inline double max_abs_diff(const SpectralField& a, const SpectralField& b) {
  double m = 0.0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < a.modes(); ++i) m = std::max(m, std::abs(a.component(c)[i] - b.component(c)[i]));
  return m;
}

// Dense Galerkin solve of the linearised step on the band |k_i| <= c with
// convection assembled by explicit convolution sums (no FFT).
inline SpectralField dense_step(const SpectralField& w, const SpectralField& u_prev, const SpectralField& noise, double mu,
                         double tau, double scale) {
  const int n = u_prev.n();
  const int c = dealias_cutoff(n);
  std::vector<std::array<int, 3>> ks;
  for (int a = -c; a <= c; ++a)
    for (int b = -c; b <= c; ++b)
      for (int d = -c; d <= c; ++d) ks.push_back({a, b, d});
  const int nb = static_cast<int>(ks.size());
  auto slot = [&](const std::array<int, 3>& k) {
    for (int i = 0; i < 3; ++i)
      if (std::abs(k[i]) > c) return -1;
    return ((k[0] + c) * (2 * c + 1) + (k[1] + c)) * (2 * c + 1) + (k[2] + c);
  };
  // Leray projector on one mode.
  auto leray = [&](const std::array<int, 3>& k) {
    Eigen::Matrix3d p = Eigen::Matrix3d::Identity();
    const double kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if (kk > 0)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) p(i, j) -= k[i] * k[j] / kk;
    return p;
  };

  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(3 * nb, 3 * nb);
  for (int q = 0; q < nb; ++q) {
    // column: unit coefficient at mode ks[q], component comp
    for (int comp = 0; comp < 3; ++comp) {
      Eigen::VectorXcd col = Eigen::VectorXcd::Zero(3 * nb);
      for (int p = 0; p < nb; ++p) {
        std::array<int, 3> k{ks[p][0] + ks[q][0], ks[p][1] + ks[q][1], ks[p][2] + ks[q][2]};
        const int s = slot(k);
        if (s < 0) continue;
        Complex wdotq{};
        for (int j = 0; j < 3; ++j)
          wdotq += w.at(j, fft_index(ks[p][0], n), fft_index(ks[p][1], n), fft_index(ks[p][2], n)) *
                   Complex{0.0, static_cast<double>(ks[q][j])};
        col[comp * nb + s] += wdotq;
      }
      for (int s = 0; s < nb; ++s) {
        const Eigen::Matrix3d pr = leray(ks[s]);
        Eigen::Vector3cd v(col[s], col[nb + s], col[2 * nb + s]);
        v = pr.cast<Complex>() * v;
        for (int i = 0; i < 3; ++i) col[i * nb + s] = v[i];
      }
      const double kk = ks[q][0] * ks[q][0] + ks[q][1] * ks[q][1] + ks[q][2] * ks[q][2];
      col *= scale * tau;
      col[comp * nb + q] += 1.0 + tau * mu * kk;
      a.col(comp * nb + q) = col;
    }
  }
  Eigen::VectorXcd rhs(3 * nb);
  for (int s = 0; s < nb; ++s) {
    Eigen::Vector3cd v;
    for (int i = 0; i < 3; ++i) {
      const auto idx = u_prev.index(fft_index(ks[s][0], n), fft_index(ks[s][1], n), fft_index(ks[s][2], n));
      v[i] = u_prev.component(i)[idx] + scale * noise.component(i)[idx];
    }
    v = leray(ks[s]).cast<Complex>() * v;
    for (int i = 0; i < 3; ++i) rhs[i * nb + s] = v[i];
  }
  const Eigen::VectorXcd x = a.partialPivLu().solve(rhs);
  SpectralField out(n);
  for (int s = 0; s < nb; ++s)
    for (int i = 0; i < 3; ++i)
      out.at(i, fft_index(ks[s][0], n), fft_index(ks[s][1], n), fft_index(ks[s][2], n)) = x[i * nb + s];
  return out;
}

inline SpectralField band_divfree(int n, std::mt19937_64& rng, double norm) {
  return random_divfree_field(n, rng, dealias_cutoff(n), 1.0, norm);
}

}  // namespace snslab::oracle
