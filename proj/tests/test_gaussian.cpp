#include <doctest.h>

#include <cmath>

#include "gdiff/errors.hpp"
#include "gdiff/gaussian.hpp"
#include "gdiff/guidance.hpp"
#include "test_support.hpp"

using namespace gdiff;
using namespace gdiff::test;

namespace {
const Schedule& sched1000() {
  static Schedule s = Schedule::linear(1000, 1e-4, 0.02);
  return s;
}
}  // namespace

TEST_CASE("conditioning: 1d closed form") {
  GaussianLaw prior{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)};
  LinearInverseProblem prob{Eigen::MatrixXd::Identity(1, 1), 1.0,
                            Eigen::VectorXd::Constant(1, 2.0)};
  GaussianLaw post = condition_on_observation(prior, prob);
  CHECK(post.mean[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(post.cov(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("conditioning: zero operator returns the prior") {
  RandomStream rng(11);
  GaussianLaw prior{random_vec(3, rng), random_spd(3, rng)};
  LinearInverseProblem prob{Eigen::MatrixXd::Zero(2, 3), 0.5,
                            random_vec(2, rng)};
  GaussianLaw post = condition_on_observation(prior, prob);
  CHECK((post.mean - prior.mean).norm() == doctest::Approx(0.0));
  CHECK((post.cov - prior.cov).norm() == doctest::Approx(0.0));
}

TEST_CASE("conditioning matches kriging sampling moments") {
  RandomStream rng(12);
  GaussianLaw prior{random_vec(3, rng), random_spd(3, rng)};
  Eigen::MatrixXd a(2, 3);
  a << 1, 0, 0, 0, 1, 0;
  LinearInverseProblem prob{a, 10.0 / 255.0, Eigen::Vector2d(0.7, -0.2)};
  GaussianLaw post = condition_on_observation(prior, prob);

  const int n = 200000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x = kriging_sample(prior, prob, rng);
    sum += x;
    sq += x * x.transpose();
  }
  Eigen::VectorXd mean = sum / n;
  Eigen::MatrixXd cov = sq / n - mean * mean.transpose();
  // 5 standard errors per entry
  for (int i = 0; i < 3; ++i) {
    double se_m = std::sqrt(post.cov(i, i) / n);
    CHECK(std::abs(mean[i] - post.mean[i]) < 5 * se_m);
    for (int j = 0; j < 3; ++j) {
      double se_c = std::sqrt((post.cov(i, i) * post.cov(j, j) +
                               post.cov(i, j) * post.cov(i, j)) /
                              n);
      CHECK(std::abs(cov(i, j) - post.cov(i, j)) < 5 * se_c);
    }
  }
}

TEST_CASE("kriging: huge noise reproduces the prior, tiny noise pins v") {
  RandomStream rng(13);
  GaussianLaw prior{random_vec(2, rng), random_spd(2, rng)};
  LinearInverseProblem loose{Eigen::MatrixXd::Identity(2, 2), 1e6,
                             Eigen::Vector2d(50.0, -50.0)};
  const int n = 50000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < n; ++i) mean += kriging_sample(prior, loose, rng);
  mean /= n;
  double se = std::sqrt(prior.cov.diagonal().maxCoeff() / n);
  CHECK((mean - prior.mean).cwiseAbs().maxCoeff() < 6 * se + 1e-3);

  LinearInverseProblem tight{Eigen::MatrixXd::Identity(2, 2), 1e-6,
                             Eigen::Vector2d(0.3, 0.4)};
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd x = kriging_sample(prior, tight, rng);
    CHECK((x - *tight.observation).norm() < 1e-4);
  }
}

TEST_CASE("forward marginal: t=0 is the prior, t=T is near standard normal") {
  RandomStream rng(14);
  GaussianLaw prior{random_vec(2, rng), random_spd(2, rng, 0.1)};
  // keep |cov| <= 1 for the endpoint contraction check
  prior.cov /= std::max(1.0, prior.cov.norm());
  const auto& s = sched1000();
  GaussianLaw m0 = forward_marginal(prior, s, 0);
  CHECK((m0.cov - prior.cov).norm() == doctest::Approx(0.0));
  CHECK((m0.mean - prior.mean).norm() == doctest::Approx(0.0));
  GaussianLaw mT = forward_marginal(prior, s, 1000);
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  CHECK((mT.cov - eye).norm() <= 4.1e-5 * (prior.cov - eye).norm() + 1e-15);
}

TEST_CASE("forward marginal matches stepwise forward simulation") {
  GaussianLaw prior = toy2d_prior();
  const auto& s = sched1000();
  const int t_check = 500;
  const int n = 100000;
  RandomStream rng(15);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXd root = psd_sqrt(prior.cov);
  for (int i = 0; i < n; ++i) {
    Eigen::Vector2d x = prior.mean + root * Eigen::Vector2d(rng.normal(), rng.normal());
    for (int t = 1; t <= t_check; ++t)
      x = std::sqrt(s.alpha(t)) * x +
          std::sqrt(s.beta(t)) * Eigen::Vector2d(rng.normal(), rng.normal());
    sum += x;
    sq += x * x.transpose();
  }
  Eigen::VectorXd mean = sum / n;
  Eigen::MatrixXd cov = sq / n - mean * mean.transpose();
  GaussianLaw ref = forward_marginal(prior, s, t_check);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(mean[i] - ref.mean[i]) < 5 * std::sqrt(ref.cov(i, i) / n));
    for (int j = 0; j < 2; ++j) {
      double se = std::sqrt((ref.cov(i, i) * ref.cov(j, j) +
                             ref.cov(i, j) * ref.cov(i, j)) /
                            n);
      CHECK(std::abs(cov(i, j) - ref.cov(i, j)) < 5 * se);
    }
  }
}

TEST_CASE("score: identity covariance and vanishing at the mode") {
  RandomStream rng(16);
  GaussianLaw prior{random_vec(3, rng), Eigen::MatrixXd::Identity(3, 3)};
  const auto& s = sched1000();
  Eigen::VectorXd x = random_vec(3, rng);
  Eigen::VectorXd sc = score(prior, s, 200, x);
  Eigen::VectorXd expected = -(x - s.sqrt_alpha_bar(200) * prior.mean);
  CHECK((sc - expected).norm() < 1e-12);
  Eigen::VectorXd mode = s.sqrt_alpha_bar(200) * prior.mean;
  CHECK(score(prior, s, 200, mode).norm() < 1e-12);
}

TEST_CASE("score matches finite differences of the log density") {
  RandomStream rng(17);
  GaussianLaw prior{random_vec(3, rng), random_spd(3, rng)};
  const auto& s = sched1000();
  const int t = 100;
  GaussianLaw marg = forward_marginal(prior, s, t);
  Eigen::LLT<Eigen::MatrixXd> llt(marg.cov);
  auto logpdf = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd c = x - marg.mean;
    return -0.5 * c.dot(llt.solve(c));  // constant dropped
  };
  Eigen::VectorXd x = random_vec(3, rng);
  Eigen::VectorXd sc = score(prior, s, t, x);
  const double h = 1e-5;
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    double fd = (logpdf(xp) - logpdf(xm)) / (2 * h);
    CHECK(sc[i] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("tweedie: degenerate and identity priors") {
  const auto& s = sched1000();
  RandomStream rng(18);
  GaussianLaw point{random_vec(2, rng), Eigen::MatrixXd::Zero(2, 2)};
  Eigen::VectorXd x = random_vec(2, rng);
  CHECK((tweedie_denoise(point, s, 700, x) - point.mean).norm() < 1e-12);

  GaussianLaw white{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
  Eigen::VectorXd d = tweedie_denoise(white, s, 300, x);
  CHECK((d - s.sqrt_alpha_bar(300) * x).norm() < 1e-12);
}

TEST_CASE("tweedie: the two algebraic forms agree") {
  RandomStream rng(19);
  const auto& s = sched1000();
  for (int t : {1, 500, 1000}) {
    GaussianLaw prior{random_vec(2, rng), random_spd(2, rng)};
    Eigen::VectorXd x = random_vec(2, rng);
    Eigen::VectorXd direct = tweedie_denoise(prior, s, t, x);
    Eigen::VectorXd via_score =
        (x + (1.0 - s.alpha_bar(t)) * score(prior, s, t, x)) /
        s.sqrt_alpha_bar(t);
    CHECK((direct - via_score).norm() <= 1e-10 * std::max(1.0, direct.norm()));
  }
}

TEST_CASE("noisy likelihood: scalar cases") {
  const auto& s = sched1000();
  GaussianLaw prior{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
  LinearInverseProblem prob{Eigen::MatrixXd::Identity(2, 2), 0.25, {}};
  const int t = 400;
  AffineGaussianKernel k = noisy_likelihood(prior, prob, s, t);
  Eigen::MatrixXd expected = (1.0 - s.alpha_bar(t) + 0.25 * 0.25) *
                             Eigen::MatrixXd::Identity(2, 2);
  CHECK((k.noise_cov - expected).norm() < 1e-12);
  // small t: the correction vanishes
  AffineGaussianKernel k1 = noisy_likelihood(prior, prob, s, 1);
  CHECK((k1.noise_cov - 0.25 * 0.25 * Eigen::MatrixXd::Identity(2, 2)).norm() <
        2e-4);
}

TEST_CASE("noisy likelihood matches joint simulation") {
  GaussianLaw prior = toy3d_prior();
  LinearInverseProblem prob = toy3d_problem();
  const auto& s = sched1000();
  const int t = 300;
  AffineGaussianKernel k = noisy_likelihood(prior, prob, s, t);

  // simulate (x_t, v) jointly: x0 ~ prior, x_t via the closed forward map,
  // v = A x0 + sigma n; estimate Cov(v | x_t) = Cov(v) - C' S_t^-1 C.
  const int n = 200000;
  RandomStream rng(20);
  Eigen::MatrixXd root = psd_sqrt(prior.cov);
  Eigen::VectorXd sum_v = Eigen::VectorXd::Zero(2), sum_x = Eigen::VectorXd::Zero(3);
  Eigen::MatrixXd sq_v = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(2, 3);
  Eigen::MatrixXd sq_x = Eigen::MatrixXd::Zero(3, 3);
  const double sab = s.sqrt_alpha_bar(t), rem = std::sqrt(1.0 - s.alpha_bar(t));
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d x0 =
        prior.mean + root * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    Eigen::Vector3d xt =
        sab * x0 + rem * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    Eigen::Vector2d v = prob.op * x0 +
                        prob.sigma * Eigen::Vector2d(rng.normal(), rng.normal());
    sum_v += v;
    sum_x += xt;
    sq_v += v * v.transpose();
    cross += v * xt.transpose();
    sq_x += xt * xt.transpose();
  }
  Eigen::VectorXd mv = sum_v / n, mx = sum_x / n;
  Eigen::MatrixXd cv = sq_v / n - mv * mv.transpose();
  Eigen::MatrixXd cvx = cross / n - mv * mx.transpose();
  Eigen::MatrixXd cx = sq_x / n - mx * mx.transpose();
  Eigen::MatrixXd cond = cv - cvx * cx.llt().solve(cvx.transpose());
  CHECK((cond - k.noise_cov).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("noisy posterior: composition identity and endpoints") {
  GaussianLaw prior = toy2d_prior();
  LinearInverseProblem prob = toy2d_problem();
  const auto& s = sched1000();
  GaussianLaw cond = condition_on_observation(prior, prob);

  GaussianLaw p0 = noisy_posterior(prior, prob, s, 0);
  CHECK((p0.mean - cond.mean).norm() < 1e-12);
  CHECK((p0.cov - cond.cov).norm() < 1e-12);

  for (int t : {1, 250, 777}) {
    GaussianLaw a = noisy_posterior(prior, prob, s, t);
    GaussianLaw b = forward_marginal(cond, s, t);
    CHECK((a.mean - b.mean).norm() < 1e-12);
    CHECK((a.cov - b.cov).norm() < 1e-12);
  }

  GaussianLaw pT = noisy_posterior(prior, prob, s, 1000);
  CHECK(pT.mean.norm() <= std::sqrt(4.1e-5) * cond.mean.norm());
  CHECK((pT.cov - Eigen::MatrixXd::Identity(2, 2)).norm() < 4.1e-5 * 20);
}

TEST_CASE("exact backward kernel: scalar covariances") {
  const auto& s = sched1000();
  // Sigma = I keeps Sigma_t = I at every t, so the exact noise is beta_t I.
  GaussianLaw white{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
  for (int t : {2, 500, 1000}) {
    AffineGaussianKernel k = exact_backward_kernel(white, s, t);
    CHECK((k.noise_cov - s.beta(t) * Eigen::MatrixXd::Identity(2, 2)).norm() <
          1e-14);
  }
  // Sigma = 0 gives Sigma_t = (1-abar_t) I and the backward noise collapses
  // to the optimal variance beta_t (1-abar_{t-1})/(1-abar_t).
  GaussianLaw point{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Zero(2, 2)};
  for (int t : {2, 500, 1000}) {
    AffineGaussianKernel k = exact_backward_kernel(point, s, t);
    double expected =
        s.beta(t) * (1.0 - s.alpha_bar(t - 1)) / (1.0 - s.alpha_bar(t));
    CHECK((k.noise_cov - expected * Eigen::MatrixXd::Identity(2, 2)).norm() <
          1e-14);
  }
}

TEST_CASE("exact backward kernel matches joint-Gaussian conditioning") {
  RandomStream rng(21);
  const auto& s = sched1000();
  GaussianLaw prior{random_vec(2, rng), random_spd(2, rng)};
  for (int t : {1, 400, 1000}) {
    AffineGaussianKernel k = exact_backward_kernel(prior, s, t);
    // condition x_{t-1} | x_t via the generic kriging lemma applied to the
    // pair (prior = marginal at t-1, operator sqrt(alpha_t) I, noise beta_t)
    GaussianLaw marg_prev = forward_marginal(prior, s, t - 1);
    Eigen::VectorXd xt = random_vec(2, rng);
    LinearInverseProblem step{
        std::sqrt(s.alpha(t)) * Eigen::MatrixXd::Identity(2, 2),
        std::sqrt(s.beta(t)), xt};
    GaussianLaw cond = condition_on_observation(marg_prev, step);
    CHECK((cond.mean - (k.lin * xt + k.shift)).norm() < 1e-10);
    CHECK((cond.cov - k.noise_cov).norm() < 1e-10);
  }
}

TEST_CASE("exact backward kernels reproduce forward marginals when composed") {
  GaussianLaw prior = toy2d_prior();
  LinearInverseProblem prob = toy2d_problem();
  const auto& s = sched1000();
  GaussianLaw cond = condition_on_observation(prior, prob);

  Eigen::VectorXd mean = forward_marginal(cond, s, 1000).mean;
  Eigen::MatrixXd cov = forward_marginal(cond, s, 1000).cov;
  double worst = 0.0;
  for (int t = 1000; t >= 1; --t) {
    AffineGaussianKernel k = exact_backward_kernel(cond, s, t);
    mean = k.lin * mean + k.shift;
    cov = (k.lin * cov * k.lin.transpose() + k.noise_cov).eval();
    GaussianLaw ref = forward_marginal(cond, s, t - 1);
    worst = std::max(worst, (mean - ref.mean).norm());
    worst = std::max(worst, (cov - ref.cov).norm());
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("psd_sqrt rejects indefinite input, clamps tiny negatives") {
  Eigen::MatrixXd bad = -Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(psd_sqrt(bad), SingularityError);
  Eigen::MatrixXd near = Eigen::MatrixXd::Zero(2, 2);
  near(0, 0) = 4.0;
  near(1, 1) = -5e-11;  // inside the clamp band
  Eigen::MatrixXd r = psd_sqrt(near);
  CHECK(r(0, 0) == doctest::Approx(2.0));
  CHECK(r(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("dimension mismatches raise parameter errors") {
  GaussianLaw prior{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
  LinearInverseProblem prob{Eigen::MatrixXd::Identity(3, 3), 0.1,
                            Eigen::VectorXd::Zero(3)};
  CHECK_THROWS_AS(condition_on_observation(prior, prob), ParameterError);
  const auto& s = sched1000();
  CHECK_THROWS_AS(score(prior, s, 10, Eigen::VectorXd::Zero(5)), ParameterError);
}

TEST_CASE("score at t=0 with singular covariance raises") {
  const auto& s = sched1000();
  GaussianLaw degenerate{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Zero(2, 2)};
  CHECK_THROWS_AS(score(degenerate, s, 0, Eigen::VectorXd::Zero(2)),
                  SingularityError);
}
