#include <doctest.h>

#include <cmath>
#include <complex>

#include "gdiff/adsn.hpp"
#include "gdiff/errors.hpp"
#include "gdiff/gaussian.hpp"
#include "test_support.hpp"

using namespace gdiff;
using namespace gdiff::test;

namespace {
const Schedule& sched1000() {
  static Schedule s = Schedule::linear(1000, 1e-4, 0.02);
  return s;
}

RGBImage random_image(int w, int h, RandomStream& rng) {
  RGBImage img = RGBImage::zero(w, h);
  for (int c = 0; c < 3; ++c)
    for (auto& v : img.planes[c]) v = rng.uniform();
  return img;
}
}  // namespace

TEST_CASE("texton: constant image gives the all-zero spectrum") {
  RGBImage img = RGBImage::constant(8, 6, {0.25, 0.5, 0.75});
  SpectralADSN model = texton_from_image(img);
  for (int c = 0; c < 3; ++c) {
    CHECK(model.mean[c] == doctest::Approx(img.planes[c][0]));
    for (const auto& v : model.that[c]) CHECK(std::abs(v) < 1e-13);
  }
}

TEST_CASE("texton: single off-mean pixel has a flat spectrum") {
  RGBImage img = RGBImage::constant(8, 8, {0.5, 0.5, 0.5});
  img.at(1, 3, 2) = 1.0;
  SpectralADSN model = texton_from_image(img);
  double expected = std::abs(model.that[1][1]);
  for (size_t f = 1; f < model.frequency_count(); ++f)
    CHECK(std::abs(model.that[1][f]) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(std::abs(model.that[1][0]) == 0.0);  // DC pinned to zero
}

TEST_CASE("texton: Parseval energy identity on the committed fixture") {
  RGBImage u = read_png(repo_path("tests/fixtures/texture64.png"));
  SpectralADSN model = texton_from_image(u);
  double spectral = 0.0;
  for (size_t f = 0; f < model.frequency_count(); ++f)
    spectral += model.texton_vec(f).squaredNorm();
  double spatial = 0.0;
  for (int c = 0; c < 3; ++c)
    for (double v : u.planes[c]) {
      double d = v - model.mean[c];
      spatial += d * d;
    }
  CHECK(spectral == doctest::Approx(spatial).epsilon(1e-8));
}

TEST_CASE("texton spectra are Hermitian symmetric") {
  RandomStream rng(61);
  RGBImage img = random_image(6, 4, rng);
  SpectralADSN model = texton_from_image(img);
  const int mrows = model.height, ncols = model.width;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < mrows; ++i)
      for (int j = 0; j < ncols; ++j) {
        auto v = model.that[c][static_cast<size_t>(i) * ncols + j];
        auto w = model.that[c][static_cast<size_t>((mrows - i) % mrows) * ncols +
                               (ncols - j) % ncols];
        CHECK(std::abs(v - std::conj(w)) < 1e-12);
      }
}

TEST_CASE("adsn_sample: zero texton yields the constant mean image") {
  RGBImage img = RGBImage::constant(8, 8, {0.3, 0.6, 0.9});
  SpectralADSN model = texton_from_image(img);
  RandomStream rng(62);
  RGBImage sample = adsn_sample(model, rng);
  for (int c = 0; c < 3; ++c)
    for (double v : sample.planes[c])
      CHECK(v == doctest::Approx(model.mean[c]).epsilon(1e-10));
}

TEST_CASE("adsn_sample: per-frequency spectral covariance matches that that^H") {
  RGBImage u = read_png(repo_path("tests/fixtures/texture8.png"));
  SpectralADSN model = texton_from_image(u);
  const size_t count = model.frequency_count();
  const double mn = static_cast<double>(count);

  const int n = 10000;
  RandomStream rng(63);
  std::vector<Eigen::Matrix3cd> acc(count, Eigen::Matrix3cd::Zero());
  Eigen::Matrix3d lag0_acc = Eigen::Matrix3d::Zero();
  for (int i = 0; i < n; ++i) {
    RGBImage x = adsn_sample(model, rng);
    SpectralField spec;
    for (int c = 0; c < 3; ++c) {
      for (auto& v : x.planes[c]) v -= model.mean[c];
      spec[c] = fft2(x.planes[c], model.height, model.width);
    }
    for (size_t f = 0; f < count; ++f) {
      Eigen::Vector3cd xf{spec[0][f], spec[1][f], spec[2][f]};
      acc[f] += xf * xf.adjoint();
    }
    // channel cross-correlation at lag 0
    Eigen::Vector3d px;
    for (size_t p = 0; p < x.pixel_count(); ++p) {
      px << x.planes[0][p], x.planes[1][p], x.planes[2][p];
      lag0_acc += px * px.transpose() / static_cast<double>(x.pixel_count());
    }
  }
  // spectral estimator: E[x_f x_f^H] / MN -> that that^H
  double worst = 0.0, scale = 0.0;
  for (size_t f = 0; f < count; ++f) {
    Eigen::Matrix3cd est = acc[f] / (static_cast<double>(n) * mn);
    Eigen::Vector3cd y = model.texton_vec(f);
    Eigen::Matrix3cd ref = y * y.adjoint();
    worst = std::max(worst, (est - ref).cwiseAbs().maxCoeff());
    scale = std::max(scale, ref.cwiseAbs().maxCoeff());
  }
  CHECK(worst < 6.0 * scale / std::sqrt(static_cast<double>(n)));

  // lag-0 spatial estimator: matches the texton autocorrelation at lag 0,
  // i.e. sum_xi that that^H / MN.
  Eigen::Matrix3d ref0 = Eigen::Matrix3d::Zero();
  for (size_t f = 0; f < count; ++f) {
    Eigen::Vector3cd y = model.texton_vec(f);
    ref0 += (y * y.adjoint()).real();
  }
  ref0 /= mn;
  Eigen::Matrix3d est0 = lag0_acc / n;
  CHECK((est0 - ref0).cwiseAbs().maxCoeff() <
        6.0 * ref0.cwiseAbs().maxCoeff() / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("rank-1 inverse lemma against the dense 3x3 inverse") {
  // The dense oracle runs in extended precision: a double cofactor inverse
  // carries eps * condition-number error of its own, which would dominate
  // the comparison on ill-conditioned draws.
  using C3 = Eigen::Matrix<std::complex<long double>, 3, 3>;
  RandomStream rng(64);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    double a = rng.uniform() * 2.0;
    double b = 0.05 + rng.uniform();
    Eigen::Vector3cd y;
    for (int k = 0; k < 3; ++k)
      y[k] = std::complex<double>(rng.normal(), rng.normal());
    Eigen::Matrix3cd m = a * (y * y.adjoint()) + b * Eigen::Matrix3cd::Identity();
    Eigen::Matrix3cd closed = rank1_plus_identity_inverse(a, b, y);
    C3 dense = m.cast<std::complex<long double>>().inverse();
    long double gap = (closed.cast<std::complex<long double>>() - dense)
                          .cwiseAbs()
                          .maxCoeff();
    worst = std::max(worst, static_cast<double>(gap));
  }
  CHECK(worst <= 1e-12);

  // specific pair from the (a, b) = (0.5, 0.3) family
  Eigen::Vector3cd y{{0.2, -0.4}, {1.0, 0.3}, {-0.7, 0.1}};
  Eigen::Matrix3cd m = 0.5 * (y * y.adjoint()) + 0.3 * Eigen::Matrix3cd::Identity();
  CHECK((rank1_plus_identity_inverse(0.5, 0.3, y) - m.inverse())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("apply_sigma_t_inverse: zero frequency scales by 1/(1-abar)") {
  RGBImage img = RGBImage::constant(4, 4, {0.4, 0.5, 0.6});
  SpectralADSN model = texton_from_image(img);  // that == 0 everywhere
  const auto& s = sched1000();
  RandomStream rng(65);
  SpectralField field;
  for (int c = 0; c < 3; ++c) {
    field[c].resize(model.frequency_count());
    for (auto& v : field[c]) v = {rng.normal(), rng.normal()};
  }
  SpectralField result = field;
  apply_sigma_t_inverse(model, s, 250, result);
  const double scale = 1.0 / (1.0 - s.alpha_bar(250));
  for (int c = 0; c < 3; ++c)
    for (size_t f = 0; f < field[c].size(); ++f)
      CHECK(std::abs(result[c][f] - scale * field[c][f]) < 1e-12);
}

TEST_CASE("apply_sigma_t_inverse composed with the forward map is identity") {
  RGBImage u = read_png(repo_path("tests/fixtures/texture8.png"));
  SpectralADSN model = texton_from_image(u);
  const auto& s = sched1000();
  const int t = 123;
  const double a = s.alpha_bar(t), b = 1.0 - s.alpha_bar(t);
  RandomStream rng(66);
  SpectralField field;
  for (int c = 0; c < 3; ++c) {
    field[c].resize(model.frequency_count());
    for (auto& v : field[c]) v = {rng.normal(), rng.normal()};
  }
  // forward: (a that that^H + b I) x
  SpectralField fwd = field;
  for (size_t f = 0; f < model.frequency_count(); ++f) {
    Eigen::Vector3cd y = model.texton_vec(f);
    Eigen::Vector3cd x{field[0][f], field[1][f], field[2][f]};
    Eigen::Vector3cd r = a * y * (y.dot(x)) + b * x;
    for (int c = 0; c < 3; ++c) fwd[c][f] = r[c];
  }
  apply_sigma_t_inverse(model, s, t, fwd);
  for (int c = 0; c < 3; ++c)
    for (size_t f = 0; f < field[c].size(); ++f)
      CHECK(std::abs(fwd[c][f] - field[c][f]) < 1e-10);
}

TEST_CASE("adsn_score: zero at the scaled mean, dense oracle on 4x4") {
  RandomStream rng(67);
  RGBImage u = random_image(4, 4, rng);
  SpectralADSN model = texton_from_image(u);
  const auto& s = sched1000();

  RGBImage at_mode = RGBImage::constant(
      4, 4,
      {s.sqrt_alpha_bar(77) * model.mean[0], s.sqrt_alpha_bar(77) * model.mean[1],
       s.sqrt_alpha_bar(77) * model.mean[2]});
  RGBImage zero = adsn_score(model, s, 77, at_mode);
  for (int c = 0; c < 3; ++c)
    for (double v : zero.planes[c]) CHECK(std::abs(v) < 1e-10);

  // dense oracle: the structured score equals the 48-dim Gaussian score
  Eigen::MatrixXd cov = dense_adsn_cov(model);
  Eigen::VectorXd mean = image_to_vec(RGBImage::constant(
      4, 4, {model.mean[0], model.mean[1], model.mean[2]}));
  GaussianLaw dense{mean, cov};
  for (int t : {1, 100, 1000}) {
    RGBImage x = random_image(4, 4, rng);
    RGBImage structured = adsn_score(model, s, t, x);
    Eigen::VectorXd ref = score(dense, s, t, image_to_vec(x));
    CHECK((image_to_vec(structured) - ref).cwiseAbs().maxCoeff() < 1e-8);
  }

  // t = T: score is approximately -(x - sqrt(abar_T) m)
  RGBImage x = random_image(4, 4, rng);
  RGBImage sc = adsn_score(model, s, 1000, x);
  double n_max = 0.0;
  for (size_t f = 0; f < model.frequency_count(); ++f)
    n_max = std::max(n_max, model.texton_vec(f).squaredNorm());
  for (int c = 0; c < 3; ++c)
    for (size_t i = 0; i < x.pixel_count(); ++i) {
      double expected =
          -(x.planes[c][i] - s.sqrt_alpha_bar(1000) * model.mean[c]);
      CHECK(std::abs(sc.planes[c][i] - expected) <
            4.2e-5 * (1.0 + n_max) * std::abs(expected) + 1e-3);
    }
}

TEST_CASE("eigenstructure: orthogonality, eigen-equations, trace identity") {
  RGBImage u = read_png(repo_path("tests/fixtures/texture8.png"));
  SpectralADSN model = texton_from_image(u);
  auto eig = eigenstructure(model);
  REQUIRE(eig.size() == model.frequency_count());

  double trace = 0.0;
  size_t zero_eigs = 0;
  for (size_t f = 0; f < eig.size(); ++f) {
    const auto& e = eig[f];
    Eigen::Vector3cd y = model.texton_vec(f);
    // pairwise Hermitian orthogonality
    CHECK(std::abs(e.v1.dot(e.v2)) < 1e-12 * std::max(1.0, e.v1.norm()));
    CHECK(std::abs(e.v1.dot(e.v3)) < 1e-12 * std::max(1.0, e.v1.norm()));
    CHECK(std::abs(e.v2.dot(e.v3)) < 1e-12);
    // eigen-equations for the rank-1 block
    Eigen::Matrix3cd block = y * y.adjoint();
    CHECK((block * e.v1 - e.lambda1 * e.v1).norm() <
          1e-12 * std::max(1.0, e.lambda1));
    CHECK((block * e.v2).norm() < 1e-12 * std::max(1.0, e.lambda1));
    CHECK((block * e.v3).norm() < 1e-12 * std::max(1.0, e.lambda1));
    trace += e.lambda1;
    zero_eigs += e.lambda1 == 0.0 ? 3 : 2;
  }
  CHECK(zero_eigs >= 2 * model.frequency_count());

  double spatial = 0.0;
  for (int c = 0; c < 3; ++c)
    for (double v : u.planes[c]) {
      double d = v - model.mean[c];
      spatial += d * d;
    }
  CHECK(trace == doctest::Approx(spatial).epsilon(1e-8));
}

TEST_CASE("eigenstructure: degenerate explicit complement falls back cleanly") {
  // texton with zero first and third channel at every frequency
  RGBImage img = RGBImage::constant(4, 4, {0.5, 0.5, 0.5});
  img.at(1, 0, 0) = 0.9;
  img.at(1, 2, 3) = 0.1;
  SpectralADSN model = texton_from_image(img);
  auto eig = eigenstructure(model);
  for (size_t f = 0; f < eig.size(); ++f) {
    const auto& e = eig[f];
    if (e.lambda1 == 0.0) continue;
    CHECK(std::abs(e.v1.dot(e.v2)) < 1e-12 * e.v1.norm());
    CHECK(std::abs(e.v2.dot(e.v3)) < 1e-12);
    CHECK(std::abs(e.v2.norm() - 1.0) < 1e-12);
    CHECK(std::abs(e.v3.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("unconditional texture generation recovers the spectral energy") {
  RGBImage u = read_png(repo_path("tests/fixtures/texture8.png"));
  SpectralADSN model = texton_from_image(u);
  Schedule s = Schedule::linear(1000, 1e-4, 0.02);
  RandomStream rng(68);

  const int n = 32;
  double energy = 0.0;
  for (int i = 0; i < n; ++i) {
    RGBImage sample = adsn_ddpm_sample(model, s, rng);
    SpectralADSN stats = texton_from_image(sample);
    for (size_t f = 0; f < stats.frequency_count(); ++f)
      energy += stats.texton_vec(f).squaredNorm();
  }
  energy /= n;
  double ref = 0.0;
  for (size_t f = 0; f < model.frequency_count(); ++f)
    ref += model.texton_vec(f).squaredNorm();
  // the backward chain adds ~beta_1-level residual variance on every mode;
  // Monte-Carlo tolerance dominates at n = 32
  CHECK(energy == doctest::Approx(ref).epsilon(0.25));
}
