#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <vector>

#include "gdiff/fft.hpp"
#include "gdiff/image.hpp"
#include "gdiff/random.hpp"
#include "gdiff/schedule.hpp"

namespace gdiff {

/// Per-channel spectra of a 3-channel field.
using SpectralField = std::array<SpectralPlane, 3>;

/// ADSN microtexture in spectral form: channel means plus the DFT of the
/// texton t_c = (u_c - m_c)/sqrt(MN). The covariance acts per frequency as
/// the rank-1 block that(xi) that(xi)^H on C^3.
struct SpectralADSN {
  int width = 0;   // N
  int height = 0;  // M
  std::array<double, 3> mean{};      // m
  SpectralField that;                // t_hat, per channel, row-major M x N

  size_t frequency_count() const {
    return static_cast<size_t>(width) * static_cast<size_t>(height);
  }
  Eigen::Vector3cd texton_vec(size_t f) const {
    return {that[0][f], that[1][f], that[2][f]};
  }
};

SpectralADSN texton_from_image(const RGBImage& u);

/// x = m + t * w with one white-noise field w shared across channels;
/// computed in the Fourier domain, output real.
RGBImage adsn_sample(const SpectralADSN& model, RandomStream& rng);

/// Closed-form inverse of a y y^H + b I on C^3 (rank-1 update of identity):
/// (1/b) I - a / (b (a |y|^2 + b)) y y^H.
Eigen::Matrix3cd rank1_plus_identity_inverse(double a, double b,
                                             const Eigen::Vector3cd& y);

/// Applies Sigma_t^-1 per frequency via the rank-1 closed form with
/// a = alpha_bar_t, b = 1 - alpha_bar_t, y = that(xi). In place.
void apply_sigma_t_inverse(const SpectralADSN& model, const Schedule& sched,
                           int t, SpectralField& field);

/// Exact score -Sigma_t^-1 (x - sqrt(alpha_bar_t) m), computed spectrally.
RGBImage adsn_score(const SpectralADSN& model, const Schedule& sched, int t,
                    const RGBImage& x);

/// Eigenstructure of the per-frequency covariance block: v1 = that(xi) with
/// eigenvalue |that(xi)|^2, and a unit orthogonal pair v2, v3 spanning the
/// null space. Zero frequencies get the canonical basis.
struct FrequencyEigenbasis {
  Eigen::Vector3cd v1, v2, v3;
  double lambda1 = 0.0;  // remaining eigenvalues are 0
};
std::vector<FrequencyEigenbasis> eigenstructure(const SpectralADSN& model);

/// Orthonormal basis [u1 u2 u3] with u1 along `that` (canonical basis when
/// that = 0); shared by all per-frequency operators of the deblurring path.
Eigen::Matrix3cd orthonormal_basis(const Eigen::Vector3cd& that);

/// Unconditional DDPM backward pass with the exact spectral score; returns
/// the terminal sample.
RGBImage adsn_ddpm_sample(const SpectralADSN& model, const Schedule& sched,
                          RandomStream& rng);

}  // namespace gdiff
