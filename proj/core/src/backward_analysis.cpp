#include "gdiff/backward_analysis.hpp"

#include <cmath>

#include "gdiff/errors.hpp"
#include "gdiff/wasserstein.hpp"

namespace gdiff {

namespace {

constexpr int kDenseDimLimit = 512;  // O(d^3) per step, T steps
constexpr double kDivergenceGuard = 1e12;

void check_dense_dim(const GaussianLaw& prior) {
  if (prior.dim() > kDenseDimLimit)
    throw ParameterError(
        "dense backward analysis is limited to dim <= 512; use the spectral "
        "path for images");
}

}  // namespace

std::vector<Eigen::VectorXd> propagate_mean(const GuidanceModel& model,
                                            const GaussianLaw& prior,
                                            const LinearInverseProblem& prob,
                                            const Schedule& sched) {
  check_dense_dim(prior);
  const int T = sched.steps();
  std::vector<Eigen::VectorXd> means(T + 1);
  means[T] = Eigen::VectorXd::Zero(prior.dim());
  for (int t = T; t >= 1; --t) {
    BackwardAffineStep step = backward_affine_step(model, prior, prob, sched, t);
    means[t - 1] = step.lin * means[t] + step.shift;
    if (!means[t - 1].allFinite() || means[t - 1].norm() > kDivergenceGuard)
      throw InstabilityError(model_name(model), t);
  }
  return means;
}

std::vector<Eigen::MatrixXd> propagate_covariance(
    const GuidanceModel& model, const GaussianLaw& prior,
    const LinearInverseProblem& prob, const Schedule& sched) {
  check_dense_dim(prior);
  const int T = sched.steps();
  const int d = prior.dim();
  std::vector<Eigen::MatrixXd> covs(T + 1);
  covs[T] = Eigen::MatrixXd::Identity(d, d);
  for (int t = T; t >= 1; --t) {
    BackwardAffineStep step = backward_affine_step(model, prior, prob, sched, t);
    Eigen::MatrixXd next = step.lin * covs[t] * step.lin.transpose();
    next.diagonal().array() += step.noise_var;
    covs[t - 1] = 0.5 * (next + next.transpose());
    if (!covs[t - 1].allFinite() ||
        covs[t - 1].cwiseAbs().maxCoeff() > kDivergenceGuard)
      throw InstabilityError(model_name(model), t);
  }
  return covs;
}

BackwardLawTrajectory propagate_backward_law(const GuidanceModel& model,
                                             const GaussianLaw& prior,
                                             const LinearInverseProblem& prob,
                                             const Schedule& sched) {
  check_dense_dim(prior);
  const int T = sched.steps();
  const int d = prior.dim();
  BackwardLawTrajectory traj;
  traj.model = model_name(model);
  traj.means.resize(T + 1);
  traj.covs.resize(T + 1);
  traj.means[T] = Eigen::VectorXd::Zero(d);
  traj.covs[T] = Eigen::MatrixXd::Identity(d, d);
  for (int t = T; t >= 1; --t) {
    BackwardAffineStep step = backward_affine_step(model, prior, prob, sched, t);
    traj.means[t - 1] = step.lin * traj.means[t] + step.shift;
    Eigen::MatrixXd next = step.lin * traj.covs[t] * step.lin.transpose();
    next.diagonal().array() += step.noise_var;
    traj.covs[t - 1] = 0.5 * (next + next.transpose());
    if (!traj.means[t - 1].allFinite() || !traj.covs[t - 1].allFinite() ||
        traj.means[t - 1].norm() > kDivergenceGuard ||
        traj.covs[t - 1].cwiseAbs().maxCoeff() > kDivergenceGuard)
      throw InstabilityError(traj.model, t);
  }
  return traj;
}

GaussianLaw induced_noisy_posterior(const GuidanceModel& model,
                                    const GaussianLaw& prior,
                                    const LinearInverseProblem& prob,
                                    const Schedule& sched, int t) {
  if (!prob.observation.has_value())
    throw ParameterError("induced posterior: observation missing");
  const auto& A = prob.op;
  const auto& v = *prob.observation;
  const int d = prior.dim();
  const double ab = sched.alpha_bar(t);
  const double sab = sched.sqrt_alpha_bar(t);

  Eigen::MatrixXd st = diffused_cov(prior, sched, t);
  Eigen::MatrixXd smooth =
      prior.cov * solve_spd(st, Eigen::MatrixXd::Identity(d, d),
                            "induced posterior: Sigma_t");
  Eigen::MatrixXd cvt = guidance_covariance(model, prior, prob, sched, t);

  // Woodbury route of the precision identity
  // C^-1 = S_t^-1 + abar S_t^-1 S A' C_{v|t}^-1 A S S_t^-1.
  Eigen::MatrixXd inner = cvt + ab * (A * (smooth * prior.cov) * A.transpose());
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::MatrixXd cross = prior.cov * A.transpose();
  GaussianLaw law;
  law.cov = st - ab * cross *
                     solve_spd(inner, cross.transpose(),
                               "induced posterior: inner matrix") ;
  law.cov = 0.5 * (law.cov + law.cov.transpose()).eval();
  Eigen::VectorXd lift = smooth * (A.transpose() * solve_spd(cvt, (v - A * prior.mean).eval(), "induced posterior: C_{v|t}"));
  law.mean = sab * prior.mean + sab * (law.cov * lift);
  return law;
}

double forward_consistency_defect(const GuidanceModel& model,
                                  const GaussianLaw& prior,
                                  const LinearInverseProblem& prob,
                                  const Schedule& sched, int t) {
  GaussianLaw at_t = induced_noisy_posterior(model, prior, prob, sched, t);
  GaussianLaw at_0 = induced_noisy_posterior(model, prior, prob, sched, 0);
  const double ab = sched.alpha_bar(t);
  Eigen::MatrixXd expected = ab * at_0.cov;
  expected.diagonal().array() += 1.0 - ab;
  return (at_t.cov - expected).norm();
}

WassersteinCurve wasserstein_curve(const GuidanceModel& model,
                                   const GaussianLaw& prior,
                                   const LinearInverseProblem& prob,
                                   const Schedule& sched) {
  const int T = sched.steps();
  BackwardLawTrajectory traj = propagate_backward_law(model, prior, prob, sched);
  GaussianLaw conditioned = condition_on_observation(prior, prob);

  WassersteinCurve curve;
  curve.model = traj.model;
  curve.split = SplitKind::kTotalOnly;
  curve.points.resize(T + 1);
  for (int t = 0; t <= T; ++t) {
    GaussianLaw truth = forward_marginal(conditioned, sched, t);
    GaussianLaw algo{traj.means[t], traj.covs[t]};
    auto& p = curve.points[t];
    p.t = t;
    p.total = wasserstein2(algo, truth);
    p.ker = 0.0;
    p.perp = p.total;
    p.mean_bias = (traj.means[t] - truth.mean).norm();
  }
  return curve;
}

}  // namespace gdiff
