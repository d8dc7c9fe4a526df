#include "gdiff/adsn.hpp"

#include <cmath>

#include "gdiff/errors.hpp"

namespace gdiff {

namespace {

SpectralPlane fft_of_normals(int rows, int cols, RandomStream& rng) {
  std::vector<double> w(static_cast<size_t>(rows) * cols);
  for (auto& v : w) v = rng.normal();
  return fft2(w, rows, cols);
}

}  // namespace

SpectralADSN texton_from_image(const RGBImage& u) {
  if (u.width < 1 || u.height < 1) throw ParameterError("texton: empty image");
  SpectralADSN model;
  model.width = u.width;
  model.height = u.height;
  const double scale = 1.0 / std::sqrt(static_cast<double>(u.pixel_count()));
  for (int c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (double v : u.planes[c]) mean += v;
    mean /= static_cast<double>(u.pixel_count());
    model.mean[c] = mean;
    std::vector<double> t(u.pixel_count());
    for (size_t i = 0; i < t.size(); ++i)
      t[i] = (u.planes[c][i] - mean) * scale;
    model.that[c] = fft2(t, u.height, u.width);
    // Mean subtraction zeroes the DC bin up to rounding; pin it exactly.
    model.that[c][0] = 0.0;
  }
  return model;
}

RGBImage adsn_sample(const SpectralADSN& model, RandomStream& rng) {
  SpectralPlane what = fft_of_normals(model.height, model.width, rng);
  RGBImage out = RGBImage::zero(model.width, model.height);
  for (int c = 0; c < 3; ++c) {
    SpectralPlane xc(what.size());
    for (size_t f = 0; f < what.size(); ++f) xc[f] = model.that[c][f] * what[f];
    std::vector<double> spatial = ifft2_real(xc, model.height, model.width);
    for (size_t i = 0; i < spatial.size(); ++i)
      out.planes[c][i] = spatial[i] + model.mean[c];
  }
  return out;
}

Eigen::Matrix3cd rank1_plus_identity_inverse(double a, double b,
                                             const Eigen::Vector3cd& y) {
  if (!(b > 0.0)) throw ParameterError("rank-1 inverse: b must be > 0");
  const double n = y.squaredNorm();
  Eigen::Matrix3cd inv = (1.0 / b) * Eigen::Matrix3cd::Identity();
  inv.noalias() -= (a / (b * (a * n + b))) * (y * y.adjoint());
  return inv;
}

void apply_sigma_t_inverse(const SpectralADSN& model, const Schedule& sched,
                           int t, SpectralField& field) {
  const double a = sched.alpha_bar(t);
  const double b = 1.0 - a;
  if (!(b > 0.0))
    throw ParameterError("apply_sigma_t_inverse: requires t >= 1");
  const size_t count = model.frequency_count();
  for (int c = 0; c < 3; ++c)
    if (field[c].size() != count)
      throw ParameterError("apply_sigma_t_inverse: field shape mismatch");
  for (size_t f = 0; f < count; ++f) {
    Eigen::Vector3cd y = model.texton_vec(f);
    Eigen::Vector3cd x{field[0][f], field[1][f], field[2][f]};
    // (1/b) x - a/(b(a n + b)) y (y^H x)
    const double n = y.squaredNorm();
    Eigen::Vector3cd r = x / b - (a / (b * (a * n + b))) * (y.dot(x)) * y;
    field[0][f] = r[0];
    field[1][f] = r[1];
    field[2][f] = r[2];
  }
}

RGBImage adsn_score(const SpectralADSN& model, const Schedule& sched, int t,
                    const RGBImage& x) {
  if (x.width != model.width || x.height != model.height)
    throw ParameterError("adsn_score: image shape mismatch");
  const double sab = sched.sqrt_alpha_bar(t);
  SpectralField field;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> centered(x.pixel_count());
    for (size_t i = 0; i < centered.size(); ++i)
      centered[i] = x.planes[c][i] - sab * model.mean[c];
    field[c] = fft2(centered, model.height, model.width);
  }
  apply_sigma_t_inverse(model, sched, t, field);
  RGBImage out = RGBImage::zero(model.width, model.height);
  for (int c = 0; c < 3; ++c) {
    for (auto& v : field[c]) v = -v;
    out.planes[c] = ifft2_real(field[c], model.height, model.width);
  }
  return out;
}

Eigen::Matrix3cd orthonormal_basis(const Eigen::Vector3cd& that) {
  Eigen::Matrix3cd basis;
  const double n2 = that.squaredNorm();
  if (n2 <= 0.0) return Eigen::Matrix3cd::Identity();
  Eigen::Vector3cd u1 = that / std::sqrt(n2);

  // First complement: the explicit (-conj t3, 0, conj t1) when it is well
  // conditioned, otherwise Gram-Schmidt from the least-aligned canonical axis.
  Eigen::Vector3cd p{-std::conj(that[2]), 0.0, std::conj(that[0])};
  if (p.squaredNorm() <= 1e-12 * n2) {
    int j = 0;
    double best = std::abs(u1[0]);
    for (int k = 1; k < 3; ++k)
      if (std::abs(u1[k]) < best) best = std::abs(u1[k]), j = k;
    p = Eigen::Vector3cd::Unit(j) - u1 * u1.dot(Eigen::Vector3cd::Unit(j));
  }
  Eigen::Vector3cd u2 = p / p.norm();

  // Second complement: canonical axis with the largest residual.
  Eigen::Vector3cd q = Eigen::Vector3cd::Zero();
  double best = -1.0;
  for (int j = 0; j < 3; ++j) {
    Eigen::Vector3cd e = Eigen::Vector3cd::Unit(j);
    Eigen::Vector3cd r = e - u1 * u1.dot(e) - u2 * u2.dot(e);
    if (r.norm() > best) best = r.norm(), q = r;
  }
  Eigen::Vector3cd u3 = q / q.norm();

  basis.col(0) = u1;
  basis.col(1) = u2;
  basis.col(2) = u3;
  return basis;
}

std::vector<FrequencyEigenbasis> eigenstructure(const SpectralADSN& model) {
  std::vector<FrequencyEigenbasis> out(model.frequency_count());
  for (size_t f = 0; f < out.size(); ++f) {
    Eigen::Vector3cd y = model.texton_vec(f);
    Eigen::Matrix3cd basis = orthonormal_basis(y);
    out[f].v1 = y.squaredNorm() > 0.0 ? y : Eigen::Vector3cd(basis.col(0));
    out[f].v2 = basis.col(1);
    out[f].v3 = basis.col(2);
    out[f].lambda1 = y.squaredNorm();
  }
  return out;
}

RGBImage adsn_ddpm_sample(const SpectralADSN& model, const Schedule& sched,
                          RandomStream& rng) {
  const int rows = model.height, cols = model.width;
  const double count = static_cast<double>(model.frequency_count());
  SpectralField state;
  for (int c = 0; c < 3; ++c)
    state[c] = fft_of_normals(rows, cols, rng);

  for (int t = sched.steps(); t >= 1; --t) {
    const double beta = sched.beta(t);
    const double inv_sa = 1.0 / std::sqrt(sched.alpha(t));
    const double sab = sched.sqrt_alpha_bar(t);
    const double noise_std = std::sqrt(beta);
    SpectralField centered = state;
    for (int c = 0; c < 3; ++c)
      centered[c][0] -= sab * model.mean[c] * count;  // DC of the mean image
    apply_sigma_t_inverse(model, sched, t, centered);
    SpectralField noise;
    for (int c = 0; c < 3; ++c) noise[c] = fft_of_normals(rows, cols, rng);
    for (int c = 0; c < 3; ++c)
      for (size_t f = 0; f < state[c].size(); ++f)
        state[c][f] = inv_sa * (state[c][f] - beta * centered[c][f]) +
                      noise_std * noise[c][f];
  }
  RGBImage out = RGBImage::zero(model.width, model.height);
  for (int c = 0; c < 3; ++c)
    out.planes[c] = ifft2_real(state[c], rows, cols, 1e-8);
  return out;
}

}  // namespace gdiff
