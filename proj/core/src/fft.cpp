#include "gdiff/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

#include "gdiff/errors.hpp"

namespace gdiff {

namespace {

// FFTW plan creation is not thread-safe; execution on caller buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

SpectralPlane run(const SpectralPlane& in, int rows, int cols, int sign) {
  if (rows < 1 || cols < 1 ||
      in.size() != static_cast<size_t>(rows) * static_cast<size_t>(cols))
    throw ParameterError("fft2: plane size does not match rows x cols");
  SpectralPlane out(in.size());
  auto* src = reinterpret_cast<fftw_complex*>(
      const_cast<std::complex<double>*>(in.data()));
  auto* dst = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_2d(rows, cols, src, dst, sign,
                            FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

}  // namespace

SpectralPlane fft2(const SpectralPlane& plane, int rows, int cols) {
  return run(plane, rows, cols, FFTW_FORWARD);
}

SpectralPlane fft2(const std::vector<double>& real_plane, int rows, int cols) {
  SpectralPlane complex_plane(real_plane.size());
  for (size_t i = 0; i < real_plane.size(); ++i)
    complex_plane[i] = real_plane[i];
  return fft2(complex_plane, rows, cols);
}

SpectralPlane ifft2(const SpectralPlane& plane, int rows, int cols) {
  SpectralPlane out = run(plane, rows, cols, FFTW_BACKWARD);
  const double scale = 1.0 / (static_cast<double>(rows) * cols);
  for (auto& v : out) v *= scale;
  return out;
}

std::vector<double> ifft2_real(const SpectralPlane& plane, int rows, int cols,
                               double imag_tol) {
  SpectralPlane out = ifft2(plane, rows, cols);
  std::vector<double> real_out(out.size());
  double scale = 0.0;
  for (const auto& v : out) scale = std::max(scale, std::abs(v.real()));
  scale = std::max(scale, 1.0);
  for (size_t i = 0; i < out.size(); ++i) {
    if (std::abs(out[i].imag()) > imag_tol * scale)
      throw SingularityError(
          "ifft2_real: spectrum is not Hermitian-symmetric (imaginary residue)");
    real_out[i] = out[i].real();
  }
  return real_out;
}

}  // namespace gdiff
