#pragma once

#include <complex>
#include <vector>

namespace gdiff {

/// Row-major M x N complex grid.
using SpectralPlane = std::vector<std::complex<double>>;

/// 2-D DFT, unnormalized forward and 1/(MN) inverse. All spectral formulas
/// in this project are transcribed under this convention.
SpectralPlane fft2(const std::vector<double>& real_plane, int rows, int cols);
SpectralPlane fft2(const SpectralPlane& plane, int rows, int cols);
SpectralPlane ifft2(const SpectralPlane& plane, int rows, int cols);

/// Inverse DFT of a Hermitian-symmetric spectrum; asserts the imaginary
/// residue stays below `imag_tol` and returns the real part.
std::vector<double> ifft2_real(const SpectralPlane& plane, int rows, int cols,
                               double imag_tol = 1e-10);

}  // namespace gdiff
