#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gdiff/gaussian.hpp"
#include "gdiff/guidance.hpp"

namespace gdiff {

/// Gaussian law of a sampler's backward process at every time; entry t holds
/// the law of y_t. means[T] = 0 and covs[T] = I by construction.
struct BackwardLawTrajectory {
  std::string model;
  std::vector<Eigen::VectorXd> means;  // index t = 0..T
  std::vector<Eigen::MatrixXd> covs;   // index t = 0..T
};

enum class SplitKind {
  kTotalOnly,    // dense path without a shared eigenbasis: ker = 0, perp = total
  kPriorKernel,  // genuine split across ker(Sigma) of the prior
};

struct WassersteinCurvePoint {
  int t = 0;
  double total = 0.0;
  double ker = 0.0;
  double perp = 0.0;
  double mean_bias = 0.0;  // |mu_t^algo - mu_t^true|
};

/// W2(backward law, true noisy posterior) per timestep; points[t] is time t.
struct WassersteinCurve {
  std::string model;
  SplitKind split = SplitKind::kTotalOnly;
  std::vector<WassersteinCurvePoint> points;
};

/// Noiseless mean recursion mu_{t-1} = lin_t mu_t + shift_t from mu_T = 0.
/// Returns means indexed by t = 0..T.
std::vector<Eigen::VectorXd> propagate_mean(const GuidanceModel& model,
                                            const GaussianLaw& prior,
                                            const LinearInverseProblem& prob,
                                            const Schedule& sched);

/// Covariance recursion S_{t-1} = lin_t S_t lin_t' + beta_t I from S_T = I,
/// symmetrized each step. Returns covariances indexed by t = 0..T.
std::vector<Eigen::MatrixXd> propagate_covariance(
    const GuidanceModel& model, const GaussianLaw& prior,
    const LinearInverseProblem& prob, const Schedule& sched);

BackwardLawTrajectory propagate_backward_law(const GuidanceModel& model,
                                             const GaussianLaw& prior,
                                             const LinearInverseProblem& prob,
                                             const Schedule& sched);

/// The Bayes-combined noisy posterior implied by the model's likelihood
/// covariance:
///   C_{t|v} = S_t - abar_t S A' (C_{v|t} + abar_t A S^2 S_t^-1 A')^-1 A S,
///   mu_{t|v} = sab_t mu + sab_t C_{t|v} S S_t^-1 A' C_{v|t}^-1 (v - A mu).
/// t = 0 requires invertible Sigma.
GaussianLaw induced_noisy_posterior(const GuidanceModel& model,
                                    const GaussianLaw& prior,
                                    const LinearInverseProblem& prob,
                                    const Schedule& sched, int t);

/// |C_{t|v}^algo - (abar_t C_{0|v}^algo + (1-abar_t) I)|_F; zero exactly when
/// the model's induced posteriors form a DDPM forward process (CGDM).
double forward_consistency_defect(const GuidanceModel& model,
                                  const GaussianLaw& prior,
                                  const LinearInverseProblem& prob,
                                  const Schedule& sched, int t);

/// W2 between the propagated backward law and the true noisy posterior at
/// each t. Dense path: total only (ker = 0). Guarded to dim <= 512.
WassersteinCurve wasserstein_curve(const GuidanceModel& model,
                                   const GaussianLaw& prior,
                                   const LinearInverseProblem& prob,
                                   const Schedule& sched);

}  // namespace gdiff
