#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gdiff/adsn.hpp"
#include "gdiff/backward_analysis.hpp"
#include "gdiff/guidance.hpp"

namespace gdiff {

/// Spatial blur kernel; periodized to the image grid on use, centered at
/// `center_row`/`center_col` so the convolution does not translate.
struct BlurKernel {
  int width = 0, height = 0;
  std::vector<double> values;  // row-major height x width, unit sum
  int center_row = 0, center_col = 0;

  double at(int row, int col) const {
    return values[static_cast<size_t>(row) * width + col];
  }
};

/// Separable zoom-out kernel from the bicubic profile (a = -0.5) dilated by
/// `factor`, unit sum. factor = 1 degenerates to the discrete delta.
BlurKernel bicubic_zoom_kernel(int factor);

/// Loads a kernel from the text format ("M N" header then M rows of N reals)
/// or from a grayscale PNG; normalizes to unit sum and centers at the
/// intensity centroid.
BlurKernel load_kernel(const std::string& path);

/// Text-format writer; round-trips load_kernel output bit-exactly.
void save_kernel_text(const BlurKernel& kernel, const std::string& path);

/// DFT of the kernel periodized onto a rows x cols grid.
SpectralPlane kernel_spectrum(const BlurKernel& kernel, int rows, int cols);

/// Channelwise periodic convolution.
RGBImage blur_apply(const BlurKernel& kernel, const RGBImage& image);

/// Draws x0 ~ ADSN and v = c * x0 + sigma n; returns (x0, v).
std::pair<RGBImage, RGBImage> make_observation(const SpectralADSN& model,
                                               const BlurKernel& kernel,
                                               double sigma, RandomStream& rng);

/// Backward law of one sampler propagated independently per frequency as
/// 3x3 complex recursions in the shared eigenbasis (Proposition-1 structure).
/// eigs[t][f] are the covariance eigenvalue triples, means[t][f] the mean in
/// eigenbasis coordinates. Sized for oracle-scale grids (MN * (T+1) capped).
struct SpectralTrajectory {
  std::string model;
  int width = 0, height = 0;
  std::vector<std::vector<std::array<double, 3>>> eigs;  // [t][f][dir]
  std::vector<std::vector<Eigen::Vector3cd,
                          Eigen::aligned_allocator<Eigen::Vector3cd>>>
      means;  // [t][f], eigenbasis coordinates
  double max_leak = 0.0;  // worst off-eigenbasis residue seen during the run
};

SpectralTrajectory spectral_backward_propagation(const SpectralADSN& model,
                                                 const BlurKernel& kernel,
                                                 const GuidanceModel& guidance,
                                                 double sigma,
                                                 const RGBImage& observation,
                                                 const Schedule& sched);

/// Streaming variant: accumulates the kernel/orthogonal W2 split against the
/// true noisy posterior at every t without storing trajectories, and renders
/// the terminal mean (noiseless recursion output).
struct DeblurModelResult {
  WassersteinCurve curve;  // split = kPriorKernel
  RGBImage terminal_mean;
  double max_leak = 0.0;
};

DeblurModelResult deblur_analyze(const SpectralADSN& model,
                                 const BlurKernel& kernel,
                                 const GuidanceModel& guidance, double sigma,
                                 const RGBImage& observation,
                                 const Schedule& sched);

std::vector<WassersteinCurve> deblur_wasserstein_curves(
    const SpectralADSN& model, const BlurKernel& kernel, double sigma,
    const RGBImage& observation, const Schedule& sched,
    const std::vector<GuidanceModel>& models);

/// One conditional sample at image scale: the affine backward steps applied
/// spectrally with fresh noise per step.
RGBImage deblur_conditional_sample(const SpectralADSN& model,
                                   const BlurKernel& kernel,
                                   const GuidanceModel& guidance, double sigma,
                                   const RGBImage& observation,
                                   const Schedule& sched, RandomStream& rng);

}  // namespace gdiff
