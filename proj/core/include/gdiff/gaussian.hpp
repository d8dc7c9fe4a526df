#pragma once

#include <Eigen/Dense>
#include <optional>

#include "gdiff/random.hpp"
#include "gdiff/schedule.hpp"

namespace gdiff {

/// Gaussian law N(mean, cov); cov symmetric PSD, rank deficiency allowed.
struct GaussianLaw {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  int dim() const { return static_cast<int>(mean.size()); }
};

/// Linear inverse problem v = A x + sigma n, n ~ N(0, I), sigma > 0.
struct LinearInverseProblem {
  Eigen::MatrixXd op;     // A, m x d
  double sigma = 0.0;     // noise level, > 0
  std::optional<Eigen::VectorXd> observation;  // v, m-vector
};

/// Conditional law x -> N(lin x + shift, noise_cov).
struct AffineGaussianKernel {
  Eigen::MatrixXd lin;
  Eigen::VectorXd shift;
  Eigen::MatrixXd noise_cov;
};

/// Throws ParameterError unless cov is square, matches mean, and is symmetric
/// to 1e-12; throws SingularityError if an eigenvalue is below -1e-10.
void validate_gaussian(const GaussianLaw& law);

/// Symmetric PSD square root by eigendecomposition. Eigenvalues in
/// [-1e-10, 0) are clamped to zero; below -1e-10 raises SingularityError.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m);

/// Solve m x = rhs for symmetric positive definite m; near-singular input
/// raises SingularityError tagged with `what`.
Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& m, const Eigen::MatrixXd& rhs,
                          const char* what);

/// Diffused covariance Sigma_t = alpha_bar_t Sigma + (1 - alpha_bar_t) I.
Eigen::MatrixXd diffused_cov(const GaussianLaw& prior, const Schedule& sched,
                             int t);

/// Posterior p(x | v) = N(mu + Sigma A' M^-1 (v - A mu),
///                        Sigma - Sigma A' M^-1 A Sigma),
/// M = A Sigma A' + sigma^2 I. Requires an observation.
GaussianLaw condition_on_observation(const GaussianLaw& prior,
                                     const LinearInverseProblem& prob);

/// Marginal of x_t: N(sqrt(alpha_bar_t) mu, Sigma_t). Valid for t in [0, T].
GaussianLaw forward_marginal(const GaussianLaw& prior, const Schedule& sched,
                             int t);

/// Score of the diffused marginal: -Sigma_t^-1 (x - sqrt(alpha_bar_t) mu).
/// Requires t >= 1 (or invertible Sigma at t = 0).
Eigen::VectorXd score(const GaussianLaw& prior, const Schedule& sched, int t,
                      const Eigen::VectorXd& x);

/// MMSE denoiser E[x_0 | x_t] = mu + sqrt(alpha_bar_t) Sigma Sigma_t^-1
/// (x - sqrt(alpha_bar_t) mu).
Eigen::VectorXd tweedie_denoise(const GaussianLaw& prior,
                                const Schedule& sched, int t,
                                const Eigen::VectorXd& x);

/// Noisy likelihood p(v | x_t) as an affine kernel in x_t:
/// N(A x0hat(x_t), (1-alpha_bar_t) A Sigma Sigma_t^-1 A' + sigma^2 I).
AffineGaussianKernel noisy_likelihood(const GaussianLaw& prior,
                                      const LinearInverseProblem& prob,
                                      const Schedule& sched, int t);

/// Noisy posterior p(x_t | v) = N(sqrt(alpha_bar_t) mu_{0|v},
///                                alpha_bar_t C_{0|v} + (1-alpha_bar_t) I).
GaussianLaw noisy_posterior(const GaussianLaw& prior,
                            const LinearInverseProblem& prob,
                            const Schedule& sched, int t);

/// Exact backward transition p(x_{t-1} | x_t):
/// mean (x_t + beta_t score(x_t)) / sqrt(alpha_t),
/// covariance beta_t Sigma_{t-1} Sigma_t^-1 (generally non-diagonal).
AffineGaussianKernel exact_backward_kernel(const GaussianLaw& prior,
                                           const Schedule& sched, int t);

/// One conditional-posterior sample by kriging:
/// L' v + xt - L' (A xt + sigma n), L = M^-1 A Sigma, with a fresh prior
/// sample xt and fresh standard normal n.
Eigen::VectorXd kriging_sample(const GaussianLaw& prior,
                               const LinearInverseProblem& prob,
                               RandomStream& rng);

/// Sample from the prior via its PSD square-root factor.
Eigen::VectorXd sample_gaussian(const GaussianLaw& law, RandomStream& rng);

}  // namespace gdiff
