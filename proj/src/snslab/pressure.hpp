#pragma once

#include <vector>

#include "snslab/noise.hpp"
#include "snslab/spectral.hpp"

namespace snslab {

/// Pressure split into a convective part and a per-mode noise part:
///   pi_det   = -Delta^{-1} div((u.grad) u)
///   Phi^pi_j = -grad Delta^{-1} div (Phi(u) e_j)
struct PressureDecomposition {
  ScalarSpectralField deterministic;
  std::vector<SpectralField> noise;
};

PressureDecomposition pressure_decompose(const SpectralField& u, const Diffusion& diffusion);

/// (sum_j ||Phi^pi_j||_{W^{1,2}}^2)^{1/2}.
double noise_pressure_hs_norm(const std::vector<SpectralField>& noise);

}  // namespace snslab
