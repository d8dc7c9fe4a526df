#include "gdiff/gaussian.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gdiff/errors.hpp"

namespace gdiff {

namespace {

constexpr double kEigenClampTol = 1e-10;

void require(bool cond, const char* msg) {
  if (!cond) throw ParameterError(msg);
}

void check_problem(const GaussianLaw& prior, const LinearInverseProblem& prob,
                   bool need_observation) {
  require(prob.op.cols() == prior.dim(),
          "inverse problem: operator column count != prior dimension");
  require(prob.sigma > 0.0, "inverse problem: sigma must be > 0");
  if (need_observation) {
    require(prob.observation.has_value(), "inverse problem: observation missing");
    require(prob.observation->size() == prob.op.rows(),
            "inverse problem: observation size != operator row count");
  }
}

// Solve M x = B for M = A Sigma A' + sigma^2 I (SPD since sigma > 0).
Eigen::MatrixXd solve_gram(const GaussianLaw& prior,
                           const LinearInverseProblem& prob,
                           const Eigen::MatrixXd& rhs) {
  const auto& A = prob.op;
  Eigen::MatrixXd M = A * prior.cov * A.transpose();
  M.diagonal().array() += prob.sigma * prob.sigma;
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success)
    throw SingularityError("conditioning: Gram matrix factorization failed");
  return llt.solve(rhs);
}

// LDLT of a symmetric matrix that must be strictly positive definite;
// near-singular pivots raise SingularityError (LDLT::isPositive accepts
// semidefinite input, which is not enough for Sigma_0 with singular Sigma).
class SpdSolver {
public:
  explicit SpdSolver(const Eigen::MatrixXd& m, const char* what) : ldlt_(m) {
    const auto& d = ldlt_.vectorD();
    double dmax = d.maxCoeff();
    if (ldlt_.info() != Eigen::Success || dmax <= 0.0 ||
        d.minCoeff() <= 64.0 * d.size() *
                            std::numeric_limits<double>::epsilon() * dmax)
      throw SingularityError(std::string(what) +
                             ": matrix not positive definite");
  }
  template <typename Rhs>
  auto solve(const Rhs& rhs) const {
    return ldlt_.solve(rhs);
  }

private:
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

}  // namespace

Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& m, const Eigen::MatrixXd& rhs,
                          const char* what) {
  return SpdSolver(m, what).solve(rhs);
}

void validate_gaussian(const GaussianLaw& law) {
  require(law.cov.rows() == law.dim() && law.cov.cols() == law.dim(),
          "gaussian: covariance shape does not match mean");
  if ((law.cov - law.cov.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw ParameterError("gaussian: covariance not symmetric to 1e-12");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(law.cov,
                                                    Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -kEigenClampTol)
    throw SingularityError("gaussian: covariance has eigenvalue < -1e-10");
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] < -kEigenClampTol)
      throw SingularityError("psd_sqrt: eigenvalue below -1e-10");
    ev[i] = ev[i] > 0.0 ? std::sqrt(ev[i]) : 0.0;
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd diffused_cov(const GaussianLaw& prior, const Schedule& sched,
                             int t) {
  const double ab = sched.alpha_bar(t);
  Eigen::MatrixXd st = ab * prior.cov;
  st.diagonal().array() += 1.0 - ab;
  return st;
}

GaussianLaw condition_on_observation(const GaussianLaw& prior,
                                     const LinearInverseProblem& prob) {
  check_problem(prior, prob, true);
  const auto& A = prob.op;
  Eigen::MatrixXd cross = prior.cov * A.transpose();          // Sigma A'
  Eigen::VectorXd resid = *prob.observation - A * prior.mean;
  Eigen::MatrixXd gain = solve_gram(prior, prob, cross.transpose());  // M^-1 A Sigma
  GaussianLaw post;
  post.mean = prior.mean + gain.transpose() * resid;
  post.cov = prior.cov - cross * gain;
  post.cov = 0.5 * (post.cov + post.cov.transpose()).eval();
  return post;
}

GaussianLaw forward_marginal(const GaussianLaw& prior, const Schedule& sched,
                             int t) {
  return {sched.sqrt_alpha_bar(t) * prior.mean, diffused_cov(prior, sched, t)};
}

Eigen::VectorXd score(const GaussianLaw& prior, const Schedule& sched, int t,
                      const Eigen::VectorXd& x) {
  require(x.size() == prior.dim(), "score: state dimension mismatch");
  Eigen::VectorXd centered = x - sched.sqrt_alpha_bar(t) * prior.mean;
  SpdSolver st(diffused_cov(prior, sched, t), "score: Sigma_t");
  return -st.solve(centered);
}

Eigen::VectorXd tweedie_denoise(const GaussianLaw& prior,
                                const Schedule& sched, int t,
                                const Eigen::VectorXd& x) {
  require(x.size() == prior.dim(), "tweedie: state dimension mismatch");
  const double sab = sched.sqrt_alpha_bar(t);
  Eigen::VectorXd centered = x - sab * prior.mean;
  SpdSolver st(diffused_cov(prior, sched, t), "tweedie: Sigma_t");
  return prior.mean + sab * (prior.cov * st.solve(centered)).eval();
}

AffineGaussianKernel noisy_likelihood(const GaussianLaw& prior,
                                      const LinearInverseProblem& prob,
                                      const Schedule& sched, int t) {
  check_problem(prior, prob, false);
  const auto& A = prob.op;
  const int d = prior.dim();
  const double ab = sched.alpha_bar(t);
  const double sab = sched.sqrt_alpha_bar(t);
  SpdSolver st(diffused_cov(prior, sched, t), "noisy_likelihood: Sigma_t");
  // x0hat(x) = mu + sab Sigma Sigma_t^-1 (x - sab mu); compose with A.
  Eigen::MatrixXd smooth =
      prior.cov * st.solve(Eigen::MatrixXd::Identity(d, d)).eval();
  AffineGaussianKernel k;
  k.lin = sab * (A * smooth);
  k.shift = A * prior.mean - sab * (k.lin * prior.mean);
  k.noise_cov = (1.0 - ab) * (A * smooth * A.transpose());
  k.noise_cov.diagonal().array() += prob.sigma * prob.sigma;
  k.noise_cov = 0.5 * (k.noise_cov + k.noise_cov.transpose()).eval();
  return k;
}

GaussianLaw noisy_posterior(const GaussianLaw& prior,
                            const LinearInverseProblem& prob,
                            const Schedule& sched, int t) {
  return forward_marginal(condition_on_observation(prior, prob), sched, t);
}

AffineGaussianKernel exact_backward_kernel(const GaussianLaw& prior,
                                           const Schedule& sched, int t) {
  const int d = prior.dim();
  const double beta = sched.beta(t);
  const double sa = std::sqrt(sched.alpha(t));
  SpdSolver st(diffused_cov(prior, sched, t), "exact_backward: Sigma_t");
  Eigen::MatrixXd sti = st.solve(Eigen::MatrixXd::Identity(d, d));
  AffineGaussianKernel k;
  k.lin = (Eigen::MatrixXd::Identity(d, d) - beta * sti) / sa;
  k.shift = (beta * sched.sqrt_alpha_bar(t) / sa) * (sti * prior.mean);
  k.noise_cov = beta * (diffused_cov(prior, sched, t - 1) * sti);
  k.noise_cov = 0.5 * (k.noise_cov + k.noise_cov.transpose()).eval();
  return k;
}

Eigen::VectorXd sample_gaussian(const GaussianLaw& law, RandomStream& rng) {
  Eigen::MatrixXd root = psd_sqrt(law.cov);
  Eigen::VectorXd z(law.dim());
  for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return law.mean + root * z;
}

Eigen::VectorXd kriging_sample(const GaussianLaw& prior,
                               const LinearInverseProblem& prob,
                               RandomStream& rng) {
  check_problem(prior, prob, true);
  const auto& A = prob.op;
  Eigen::MatrixXd gain = solve_gram(prior, prob, (A * prior.cov).eval());  // L = M^-1 A Sigma
  Eigen::VectorXd xt = sample_gaussian(prior, rng);
  Eigen::VectorXd n(A.rows());
  for (int i = 0; i < n.size(); ++i) n[i] = rng.normal();
  Eigen::VectorXd pseudo_obs = A * xt + prob.sigma * n;
  return gain.transpose() * (*prob.observation) + xt -
         gain.transpose() * pseudo_obs;
}

}  // namespace gdiff
