#pragma once

#include <complex>
#include <span>

namespace snslab {

using Complex = std::complex<double>;

/// Unnormalised complex 3D DFT on an N^3 grid, row-major (x1 slowest).
///
/// Plans are created once per N and shared; execution is reentrant, so the
/// same transform may run concurrently on distinct buffers.
void fft_forward(int n, std::span<const Complex> in, std::span<Complex> out);
void fft_backward(int n, std::span<const Complex> in, std::span<Complex> out);

}  // namespace snslab
