#include "snslab/pressure.hpp"

#include <cmath>
#include <stdexcept>

namespace snslab {

PressureDecomposition pressure_decompose(const SpectralField& u, const Diffusion& diffusion) {
  if (!u.divergence_free() || divergence_defect(u) > 1e-10)
    throw std::invalid_argument("pressure_decompose: velocity must be divergence-free");
  ScalarSpectralField div = divergence(convect(u, u));
  div.coeffs()[0] = Complex{};
  ScalarSpectralField det = inv_laplacian(div);
  for (auto& c : det.coeffs()) c = -c;
  PressureDecomposition out{std::move(det), {}};
  for (const auto& f : diffusion.mode_fields(u)) out.noise.push_back(gradient_part(f));
  return out;
}

double noise_pressure_hs_norm(const std::vector<SpectralField>& noise) {
  double sum = 0.0;
  for (const auto& f : noise) {
    const double v = sobolev_norm(f, 1);
    sum += v * v;
  }
  return std::sqrt(sum);
}

}  // namespace snslab
