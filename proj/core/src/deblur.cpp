#include "gdiff/deblur.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gdiff/errors.hpp"

namespace gdiff {

namespace {

constexpr double kDivergenceGuard = 1e12;
constexpr double kEigenFloor = -1e-8;
constexpr double kKernelEigThreshold = 1e-12;  // relative to max |that|^2
constexpr size_t kTrajectoryCap = 2'000'000;   // (T+1) * MN entries
constexpr size_t kBlock = 256;                 // frequencies per reduction block

double bicubic_profile(double x) {
  // Keys kernel, a = -0.5.
  const double a = -0.5;
  double ax = std::abs(x);
  if (ax <= 1.0) return ((a + 2.0) * ax - (a + 3.0)) * ax * ax + 1.0;
  if (ax < 2.0) return (((ax - 5.0) * ax + 8.0) * ax - 4.0) * a;
  return 0.0;
}

void normalize_and_center(BlurKernel& k) {
  double sum = 0.0;
  for (double v : k.values) sum += v;
  if (std::abs(sum) < 1e-300)
    throw ParameterError("kernel: values sum to zero");
  // Skip the division when already unit-sum so that saved kernels round-trip
  // bit-exactly.
  if (std::abs(sum - 1.0) > 1e-12)
    for (double& v : k.values) v /= sum;
  double wr = 0.0, wc = 0.0;
  for (int r = 0; r < k.height; ++r)
    for (int c = 0; c < k.width; ++c) {
      wr += k.at(r, c) * r;
      wc += k.at(r, c) * c;
    }
  k.center_row = static_cast<int>(std::lround(wr));
  k.center_col = static_cast<int>(std::lround(wc));
  k.center_row = std::clamp(k.center_row, 0, k.height - 1);
  k.center_col = std::clamp(k.center_col, 0, k.width - 1);
}

}  // namespace

BlurKernel bicubic_zoom_kernel(int factor) {
  if (factor < 1) throw ParameterError("bicubic kernel: factor must be >= 1");
  const int half = 2 * factor - 1;
  std::vector<double> taps(2 * half + 1);
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    taps[i + half] = bicubic_profile(static_cast<double>(i) / factor);
    sum += taps[i + half];
  }
  for (double& v : taps) v /= sum;

  BlurKernel k;
  k.width = k.height = 2 * half + 1;
  k.values.resize(static_cast<size_t>(k.width) * k.height);
  for (int r = 0; r < k.height; ++r)
    for (int c = 0; c < k.width; ++c)
      k.values[static_cast<size_t>(r) * k.width + c] = taps[r] * taps[c];
  normalize_and_center(k);
  return k;
}

BlurKernel load_kernel(const std::string& path) {
  BlurKernel k;
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".png") {
    std::vector<double> gray = read_png_gray(path, k.width, k.height);
    k.values = std::move(gray);
  } else {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open kernel file '" + path + "'");
    int rows = 0, cols = 0;
    if (!(in >> rows >> cols) || rows < 1 || cols < 1)
      throw IoError("kernel file '" + path + "': bad 'M N' header");
    k.height = rows;
    k.width = cols;
    k.values.resize(static_cast<size_t>(rows) * cols);
    for (auto& v : k.values)
      if (!(in >> v))
        throw IoError("kernel file '" + path + "': truncated value matrix");
  }
  normalize_and_center(k);
  return k;
}

void save_kernel_text(const BlurKernel& kernel, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << kernel.height << ' ' << kernel.width << '\n';
  char buf[40];
  for (int r = 0; r < kernel.height; ++r) {
    for (int c = 0; c < kernel.width; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", kernel.at(r, c));
      out << buf << (c + 1 < kernel.width ? ' ' : '\n');
    }
  }
  if (!out) throw IoError("failed writing kernel to '" + path + "'");
}

SpectralPlane kernel_spectrum(const BlurKernel& kernel, int rows, int cols) {
  std::vector<double> periodized(static_cast<size_t>(rows) * cols, 0.0);
  for (int r = 0; r < kernel.height; ++r)
    for (int c = 0; c < kernel.width; ++c) {
      int pr = ((r - kernel.center_row) % rows + rows) % rows;
      int pc = ((c - kernel.center_col) % cols + cols) % cols;
      periodized[static_cast<size_t>(pr) * cols + pc] += kernel.at(r, c);
    }
  return fft2(periodized, rows, cols);
}

RGBImage blur_apply(const BlurKernel& kernel, const RGBImage& image) {
  SpectralPlane chat = kernel_spectrum(kernel, image.height, image.width);
  RGBImage out = RGBImage::zero(image.width, image.height);
  for (int c = 0; c < 3; ++c) {
    SpectralPlane spec = fft2(image.planes[c], image.height, image.width);
    for (size_t f = 0; f < spec.size(); ++f) spec[f] *= chat[f];
    out.planes[c] = ifft2_real(spec, image.height, image.width);
  }
  return out;
}

std::pair<RGBImage, RGBImage> make_observation(const SpectralADSN& model,
                                               const BlurKernel& kernel,
                                               double sigma,
                                               RandomStream& rng) {
  if (!(sigma > 0.0)) throw ParameterError("make_observation: sigma must be > 0");
  RGBImage x0 = adsn_sample(model, rng);
  RGBImage v = blur_apply(kernel, x0);
  for (int c = 0; c < 3; ++c)
    for (auto& val : v.planes[c]) val += sigma * rng.normal();
  return {std::move(x0), std::move(v)};
}

namespace {

// Everything one frequency needs for its backward recursion.
struct FrequencyContext {
  Eigen::Vector3cd that;
  double n = 0.0;                 // |that|^2
  std::complex<double> chat;
  double c2 = 0.0;                // |chat|^2
  Eigen::Matrix3cd V;             // orthonormal basis, col 0 along that
  Eigen::Matrix3cd Th;            // that that^H
  Eigen::Vector3cd mu_hat;        // DFT of the constant mean image
  Eigen::Vector3cd v_hat;
  bool dir1_in_kernel = false;    // |that|^2 at the kernel threshold
};

struct CanonicalStep {
  Eigen::Matrix3cd lin;
  Eigen::Vector3cd shift;
};

FrequencyContext make_context(const SpectralADSN& model,
                              const SpectralPlane& chat,
                              const SpectralField& vhat, double n_max,
                              size_t f) {
  FrequencyContext ctx;
  ctx.that = model.texton_vec(f);
  ctx.n = ctx.that.squaredNorm();
  ctx.chat = chat[f];
  ctx.c2 = std::norm(ctx.chat);
  ctx.V = orthonormal_basis(ctx.that);
  ctx.Th = ctx.that * ctx.that.adjoint();
  ctx.mu_hat = Eigen::Vector3cd::Zero();
  if (f == 0) {
    const double count = static_cast<double>(model.frequency_count());
    for (int c = 0; c < 3; ++c) ctx.mu_hat[c] = model.mean[c] * count;
  }
  ctx.v_hat = {vhat[0][f], vhat[1][f], vhat[2][f]};
  ctx.dir1_in_kernel = ctx.n <= kKernelEigThreshold * n_max;
  return ctx;
}

// The conditional backward step on this frequency's 3x3 block, canonical
// coordinates. Guidance inverses go through the rank-1 lemma (CGDM) or plain
// scalar algebra (DPS / PiGDM, whose covariances are scalar on the block).
CanonicalStep assemble_step(const FrequencyContext& F,
                            const GuidanceModel& guidance, double sigma,
                            const Schedule& sched, int t) {
  const double a = sched.alpha_bar(t);
  const double b = 1.0 - a;
  const double beta = sched.beta(t);
  const double inv_sa = 1.0 / std::sqrt(sched.alpha(t));
  const double sig2 = sigma * sigma;

  Eigen::Matrix3cd sti = rank1_plus_identity_inverse(a, b, F.that);
  Eigen::Matrix3cd P = sti * F.Th;  // Sigma_t^-1 Sigma

  Eigen::Matrix3cd gi;
  if (const auto* dps = std::get_if<DpsGuidance>(&guidance)) {
    gi = (dps->alpha / sig2) * Eigen::Matrix3cd::Identity();
  } else if (std::holds_alternative<PiGdmGuidance>(guidance)) {
    gi = (1.0 / (b * F.c2 + sig2)) * Eigen::Matrix3cd::Identity();
  } else {
    gi = rank1_plus_identity_inverse(b * F.c2 / (a * F.n + b), sig2, F.that);
  }

  CanonicalStep step;
  step.lin = inv_sa * (Eigen::Matrix3cd::Identity() - beta * sti -
                       (beta * a * F.c2) * (P * gi * P.adjoint()));
  Eigen::Vector3cd inner = F.v_hat - F.chat * F.mu_hat +
                           a * F.chat * (P.adjoint() * F.mu_hat);
  step.shift = beta * sched.sqrt_alpha_bar(t - 1) *
               (sti * F.mu_hat + P * (std::conj(F.chat) * (gi * inner)));
  return step;
}

// True noisy-posterior eigenvalue on the texton direction; the two null
// directions carry 1 - alpha_bar_t.
double true_posterior_eig1(const FrequencyContext& F, double sigma, double a) {
  const double sig2 = sigma * sigma;
  return a * F.n + (1.0 - a) -
         a * F.c2 * F.n * F.n / (F.c2 * F.n + sig2);
}

Eigen::Vector3cd true_posterior_mean_eig(const FrequencyContext& F,
                                         double sigma, double sab) {
  Eigen::Matrix3cd minv =
      rank1_plus_identity_inverse(F.c2, sigma * sigma, F.that);
  Eigen::Vector3cd mu0v =
      F.mu_hat + std::conj(F.chat) *
                     (F.Th * (minv * (F.v_hat - F.chat * F.mu_hat)));
  return sab * (F.V.adjoint() * mu0v);
}

double off_basis_residue(const Eigen::Matrix3cd& s) {
  double r = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      r = std::max(r, i == j ? std::abs(s(i, j).imag())
                             : std::abs(s(i, j)));
  double scale = std::max({1.0, std::abs(s(0, 0).real()),
                           std::abs(s(1, 1).real()),
                           std::abs(s(2, 2).real())});
  return r / scale;
}

SpectralField fft_channels(const RGBImage& img) {
  SpectralField out;
  for (int c = 0; c < 3; ++c)
    out[c] = fft2(img.planes[c], img.height, img.width);
  return out;
}

double max_texton_energy(const SpectralADSN& model) {
  double n_max = 0.0;
  for (size_t f = 0; f < model.frequency_count(); ++f)
    n_max = std::max(n_max, model.texton_vec(f).squaredNorm());
  return n_max;
}

void check_observation(const SpectralADSN& model, const RGBImage& observation,
                       double sigma) {
  if (observation.width != model.width || observation.height != model.height)
    throw ParameterError("deblur: observation shape mismatch");
  if (!(sigma > 0.0)) throw ParameterError("deblur: sigma must be > 0");
}

}  // namespace

SpectralTrajectory spectral_backward_propagation(const SpectralADSN& model,
                                                 const BlurKernel& kernel,
                                                 const GuidanceModel& guidance,
                                                 double sigma,
                                                 const RGBImage& observation,
                                                 const Schedule& sched) {
  check_observation(model, observation, sigma);
  const int T = sched.steps();
  const size_t count = model.frequency_count();
  if (count * static_cast<size_t>(T + 1) > kTrajectoryCap)
    throw ParameterError(
        "spectral trajectory storage exceeds cap; use deblur_analyze for "
        "large grids");

  SpectralPlane chat = kernel_spectrum(kernel, model.height, model.width);
  SpectralField vhat = fft_channels(observation);
  const double n_max = max_texton_energy(model);
  const std::string name = model_name(guidance);

  SpectralTrajectory traj;
  traj.model = name;
  traj.width = model.width;
  traj.height = model.height;
  traj.eigs.assign(T + 1, std::vector<std::array<double, 3>>(count));
  traj.means.assign(
      T + 1,
      std::vector<Eigen::Vector3cd, Eigen::aligned_allocator<Eigen::Vector3cd>>(
          count, Eigen::Vector3cd::Zero()));

  double leak = 0.0;
  for (size_t f = 0; f < count; ++f) {
    FrequencyContext ctx = make_context(model, chat, vhat, n_max, f);
    Eigen::Matrix3cd cov = Eigen::Matrix3cd::Identity();
    Eigen::Vector3cd mean = Eigen::Vector3cd::Zero();
    for (int k = 0; k < 3; ++k) traj.eigs[T][f][k] = 1.0;
    for (int t = T; t >= 1; --t) {
      CanonicalStep step = assemble_step(ctx, guidance, sigma, sched, t);
      Eigen::Matrix3cd d = ctx.V.adjoint() * step.lin * ctx.V;
      cov = (d * cov * d.adjoint()).eval();
      cov.diagonal().array() += sched.beta(t);
      mean = d * mean + ctx.V.adjoint() * step.shift;
      leak = std::max(leak, off_basis_residue(cov));
      for (int k = 0; k < 3; ++k) {
        double ev = cov(k, k).real();
        if (ev < kEigenFloor)
          throw SingularityError("spectral propagation: eigenvalue below -1e-8");
        if (ev > kDivergenceGuard || !std::isfinite(ev))
          throw InstabilityError(name, t);
        traj.eigs[t - 1][f][k] = ev;
      }
      if (!mean.allFinite() || mean.norm() > kDivergenceGuard)
        throw InstabilityError(name, t);
      traj.means[t - 1][f] = mean;
    }
  }
  traj.max_leak = leak;
  return traj;
}

DeblurModelResult deblur_analyze(const SpectralADSN& model,
                                 const BlurKernel& kernel,
                                 const GuidanceModel& guidance, double sigma,
                                 const RGBImage& observation,
                                 const Schedule& sched) {
  check_observation(model, observation, sigma);
  const int T = sched.steps();
  const size_t count = model.frequency_count();
  const double inv_count = 1.0 / static_cast<double>(count);

  SpectralPlane chat = kernel_spectrum(kernel, model.height, model.width);
  SpectralField vhat = fft_channels(observation);
  const double n_max = max_texton_energy(model);
  const std::string name = model_name(guidance);

  const size_t n_blocks = (count + kBlock - 1) / kBlock;
  struct BlockAccum {
    std::vector<double> ker2, perp2, bias2;
    double leak = 0.0;
    int fail_t = -1;          // instability timestep, if any
    bool eig_floor = false;   // eigenvalue fell below the floor
  };
  std::vector<BlockAccum> blocks(n_blocks);
  std::vector<Eigen::Vector3cd,
              Eigen::aligned_allocator<Eigen::Vector3cd>>
      terminal_mean(count, Eigen::Vector3cd::Zero());

  // Frequencies are independent; blocks keep the reduction order fixed so
  // results do not depend on the thread count.
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t bi = 0; bi < static_cast<std::int64_t>(n_blocks); ++bi) {
    BlockAccum& acc = blocks[bi];
    acc.ker2.assign(T + 1, 0.0);
    acc.perp2.assign(T + 1, 0.0);
    acc.bias2.assign(T + 1, 0.0);
    const size_t f_begin = bi * kBlock;
    const size_t f_end = std::min(count, f_begin + kBlock);
    for (size_t f = f_begin; f < f_end && acc.fail_t < 0; ++f) {
      FrequencyContext ctx = make_context(model, chat, vhat, n_max, f);
      Eigen::Matrix3cd cov = Eigen::Matrix3cd::Identity();
      Eigen::Vector3cd mean = Eigen::Vector3cd::Zero();
      for (int t = T; t >= 0; --t) {
        if (t < T) {
          CanonicalStep step = assemble_step(ctx, guidance, sigma, sched, t + 1);
          Eigen::Matrix3cd d = ctx.V.adjoint() * step.lin * ctx.V;
          cov = (d * cov * d.adjoint()).eval();
          cov.diagonal().array() += sched.beta(t + 1);
          mean = d * mean + ctx.V.adjoint() * step.shift;
          acc.leak = std::max(acc.leak, off_basis_residue(cov));
        }
        const double a = sched.alpha_bar(t);
        const double nu1 = true_posterior_eig1(ctx, sigma, a);
        const double nu23 = 1.0 - a;
        Eigen::Vector3cd tmean =
            true_posterior_mean_eig(ctx, sigma, sched.sqrt_alpha_bar(t));
        bool bad = false;
        for (int k = 0; k < 3; ++k) {
          double lam = cov(k, k).real();
          if (!std::isfinite(lam) || lam > kDivergenceGuard) bad = true;
          if (lam < kEigenFloor) acc.eig_floor = true;
          lam = std::max(lam, 0.0);
          const double nu = k == 0 ? nu1 : nu23;
          const double dcov = std::sqrt(nu) - std::sqrt(lam);
          const double dmean2 = std::norm(mean[k] - tmean[k]) * inv_count;
          const bool in_kernel = k == 0 ? ctx.dir1_in_kernel : true;
          (in_kernel ? acc.ker2[t] : acc.perp2[t]) += dcov * dcov + dmean2;
          acc.bias2[t] += dmean2;
        }
        if (bad || !mean.allFinite() || mean.norm() > kDivergenceGuard) {
          acc.fail_t = std::max(t, 1);
          break;
        }
        if (t == 0) terminal_mean[f] = ctx.V * mean;
      }
    }
  }

  DeblurModelResult result;
  result.curve.model = name;
  result.curve.split = SplitKind::kPriorKernel;
  result.curve.points.resize(T + 1);
  std::vector<double> ker2(T + 1, 0.0), perp2(T + 1, 0.0), bias2(T + 1, 0.0);
  for (const auto& acc : blocks) {
    if (acc.eig_floor)
      throw SingularityError("spectral propagation: eigenvalue below -1e-8");
    if (acc.fail_t >= 0) throw InstabilityError(name, acc.fail_t);
    for (int t = 0; t <= T; ++t) {
      ker2[t] += acc.ker2[t];
      perp2[t] += acc.perp2[t];
      bias2[t] += acc.bias2[t];
    }
    result.max_leak = std::max(result.max_leak, acc.leak);
  }
  for (int t = 0; t <= T; ++t) {
    auto& p = result.curve.points[t];
    p.t = t;
    p.ker = std::sqrt(ker2[t]);
    p.perp = std::sqrt(perp2[t]);
    p.total = std::sqrt(ker2[t] + perp2[t]);
    p.mean_bias = std::sqrt(bias2[t]);
  }

  SpectralField mean_field;
  for (int c = 0; c < 3; ++c) mean_field[c].resize(count);
  for (size_t f = 0; f < count; ++f)
    for (int c = 0; c < 3; ++c) mean_field[c][f] = terminal_mean[f][c];
  result.terminal_mean = RGBImage::zero(model.width, model.height);
  for (int c = 0; c < 3; ++c)
    result.terminal_mean.planes[c] =
        ifft2_real(mean_field[c], model.height, model.width, 1e-8);
  return result;
}

std::vector<WassersteinCurve> deblur_wasserstein_curves(
    const SpectralADSN& model, const BlurKernel& kernel, double sigma,
    const RGBImage& observation, const Schedule& sched,
    const std::vector<GuidanceModel>& models) {
  std::vector<WassersteinCurve> curves;
  curves.reserve(models.size());
  for (const auto& guidance : models)
    curves.push_back(
        deblur_analyze(model, kernel, guidance, sigma, observation, sched)
            .curve);
  return curves;
}

RGBImage deblur_conditional_sample(const SpectralADSN& model,
                                   const BlurKernel& kernel,
                                   const GuidanceModel& guidance, double sigma,
                                   const RGBImage& observation,
                                   const Schedule& sched, RandomStream& rng) {
  check_observation(model, observation, sigma);
  const int T = sched.steps();
  const size_t count = model.frequency_count();
  SpectralPlane chat = kernel_spectrum(kernel, model.height, model.width);
  SpectralField vhat = fft_channels(observation);
  const double n_max = max_texton_energy(model);
  const std::string name = model_name(guidance);

  std::vector<FrequencyContext> ctxs;
  ctxs.reserve(count);
  for (size_t f = 0; f < count; ++f)
    ctxs.push_back(make_context(model, chat, vhat, n_max, f));

  // y_T ~ N(0, I) in space, kept spectrally.
  SpectralField state;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> w(count);
    for (auto& x : w) x = rng.normal();
    state[c] = fft2(w, model.height, model.width);
  }
  for (int t = T; t >= 1; --t) {
    const double noise_std = std::sqrt(sched.beta(t));
    SpectralField noise;
    for (int c = 0; c < 3; ++c) {
      std::vector<double> w(count);
      for (auto& x : w) x = rng.normal();
      noise[c] = fft2(w, model.height, model.width);
    }
    for (size_t f = 0; f < count; ++f) {
      CanonicalStep step = assemble_step(ctxs[f], guidance, sigma, sched, t);
      Eigen::Vector3cd y{state[0][f], state[1][f], state[2][f]};
      Eigen::Vector3cd z{noise[0][f], noise[1][f], noise[2][f]};
      y = step.lin * y + step.shift + noise_std * z;
      if (!y.allFinite() ||
          y.norm() > kDivergenceGuard * std::sqrt(static_cast<double>(count)))
        throw InstabilityError(name, t);
      for (int c = 0; c < 3; ++c) state[c][f] = y[c];
    }
  }
  RGBImage out = RGBImage::zero(model.width, model.height);
  for (int c = 0; c < 3; ++c)
    out.planes[c] = ifft2_real(state[c], model.height, model.width, 1e-8);
  return out;
}

}  // namespace gdiff
