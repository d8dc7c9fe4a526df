#include "gdiff/guidance.hpp"

#include <cmath>

#include "gdiff/errors.hpp"

namespace gdiff {

namespace {

constexpr double kDivergenceGuard = 1e12;

void check(bool cond, const char* msg) {
  if (!cond) throw ParameterError(msg);
}

Eigen::VectorXd standard_normal(int d, RandomStream& rng) {
  Eigen::VectorXd z(d);
  for (int i = 0; i < d; ++i) z[i] = rng.normal();
  return z;
}

}  // namespace

std::string model_name(const GuidanceModel& model) {
  if (std::holds_alternative<DpsGuidance>(model)) return "dps";
  if (std::holds_alternative<PiGdmGuidance>(model)) return "pigdm";
  return "cgdm";
}

GuidanceModel model_from_name(const std::string& name, double alpha_dps) {
  if (name == "dps") {
    if (!(alpha_dps > 0.0))
      throw ParameterError("dps: alpha_dps must be > 0 and is required");
    return DpsGuidance{alpha_dps};
  }
  if (name == "pigdm") return PiGdmGuidance{};
  if (name == "cgdm") return CgdmGuidance{};
  throw ParameterError("unknown guidance model '" + name + "'");
}

Eigen::MatrixXd guidance_covariance(const GuidanceModel& model,
                                    const GaussianLaw& prior,
                                    const LinearInverseProblem& prob,
                                    const Schedule& sched, int t) {
  check(prob.op.cols() == prior.dim(), "guidance: operator/prior dimension mismatch");
  const auto& A = prob.op;
  const int m = static_cast<int>(A.rows());
  const double sig2 = prob.sigma * prob.sigma;
  const double one_minus_ab = 1.0 - sched.alpha_bar(t);

  if (const auto* dps = std::get_if<DpsGuidance>(&model)) {
    if (!(dps->alpha > 0.0)) throw ParameterError("dps: alpha_dps must be > 0");
    return (sig2 / dps->alpha) * Eigen::MatrixXd::Identity(m, m);
  }
  if (std::holds_alternative<PiGdmGuidance>(model)) {
    Eigen::MatrixXd c = one_minus_ab * (A * A.transpose());
    c.diagonal().array() += sig2;
    return c;
  }
  Eigen::MatrixXd c =
      one_minus_ab *
      (A * prior.cov *
       solve_spd(diffused_cov(prior, sched, t), A.transpose(), "guidance: Sigma_t"));
  c = 0.5 * (c + c.transpose()).eval();
  c.diagonal().array() += sig2;
  return c;
}

BackwardAffineStep backward_affine_step(const GuidanceModel& model,
                                        const GaussianLaw& prior,
                                        const LinearInverseProblem& prob,
                                        const Schedule& sched, int t) {
  check(prob.observation.has_value(), "backward step: observation missing");
  check(prob.observation->size() == prob.op.rows(),
        "backward step: observation size mismatch");
  const auto& A = prob.op;
  const auto& v = *prob.observation;
  const int d = prior.dim();
  const double beta = sched.beta(t);
  const double sa = std::sqrt(sched.alpha(t));
  const double ab = sched.alpha_bar(t);

  Eigen::MatrixXd sti = solve_spd(diffused_cov(prior, sched, t),
                                  Eigen::MatrixXd::Identity(d, d),
                                  "backward step: Sigma_t");
  Eigen::MatrixXd smooth = prior.cov * sti;  // Sigma Sigma_t^-1 = Sigma_t^-1 Sigma

  Eigen::LLT<Eigen::MatrixXd> cvt(
      guidance_covariance(model, prior, prob, sched, t));
  if (cvt.info() != Eigen::Success)
    throw SingularityError("backward step: guidance covariance not SPD");

  // y_{t-1} = (y_t + beta (score + guidance gradient)) / sqrt(alpha_t)
  // expanded on the Gaussian closed forms; see the two-path tests.
  Eigen::MatrixXd guided = smooth * A.transpose() * cvt.solve(A * smooth.transpose()).eval();
  BackwardAffineStep step;
  step.lin = (Eigen::MatrixXd::Identity(d, d) - beta * sti - beta * ab * guided) / sa;
  Eigen::VectorXd inner =
      v - A * prior.mean + ab * (A * (smooth.transpose() * prior.mean));
  step.shift = beta * sched.sqrt_alpha_bar(t - 1) *
               (sti * prior.mean +
                smooth * (A.transpose() * cvt.solve(inner).eval()));
  step.noise_var = beta;
  return step;
}

std::vector<BackwardAffineStep> backward_affine_sequence(
    const GuidanceModel& model, const GaussianLaw& prior,
    const LinearInverseProblem& prob, const Schedule& sched) {
  std::vector<BackwardAffineStep> steps(sched.steps());
  for (int t = 1; t <= sched.steps(); ++t)
    steps[t - 1] = backward_affine_step(model, prior, prob, sched, t);
  return steps;
}

std::vector<Eigen::VectorXd> simulate_conditional(
    const std::vector<BackwardAffineStep>& steps, const std::string& model,
    const Schedule& sched, RandomStream& rng) {
  const int T = sched.steps();
  check(static_cast<int>(steps.size()) == T, "simulate: step count != T");
  const int d = static_cast<int>(steps.front().lin.rows());
  std::vector<Eigen::VectorXd> traj(T + 1);
  traj[T] = standard_normal(d, rng);
  for (int t = T; t >= 1; --t) {
    const auto& s = steps[t - 1];
    traj[t - 1] = s.lin * traj[t] + s.shift +
                  std::sqrt(s.noise_var) * standard_normal(d, rng);
    if (!traj[t - 1].allFinite() || traj[t - 1].norm() > kDivergenceGuard)
      throw InstabilityError(model, t);
  }
  return traj;
}

std::vector<Eigen::VectorXd> simulate_conditional(
    const GuidanceModel& model, const GaussianLaw& prior,
    const LinearInverseProblem& prob, const Schedule& sched,
    RandomStream& rng) {
  return simulate_conditional(
      backward_affine_sequence(model, prior, prob, sched), model_name(model),
      sched, rng);
}

std::vector<Eigen::VectorXd> simulate_unconditional(const GaussianLaw& prior,
                                                    const Schedule& sched,
                                                    RandomStream& rng,
                                                    Direction direction) {
  const int T = sched.steps();
  const int d = prior.dim();
  std::vector<Eigen::VectorXd> traj(T + 1);
  if (direction == Direction::kForward) {
    traj[0] = sample_gaussian(prior, rng);
    for (int t = 1; t <= T; ++t)
      traj[t] = std::sqrt(sched.alpha(t)) * traj[t - 1] +
                std::sqrt(sched.beta(t)) * standard_normal(d, rng);
  } else {
    traj[T] = standard_normal(d, rng);
    for (int t = T; t >= 1; --t) {
      double beta = sched.beta(t);
      traj[t - 1] = (traj[t] + beta * score(prior, sched, t, traj[t])) /
                        std::sqrt(sched.alpha(t)) +
                    std::sqrt(beta) * standard_normal(d, rng);
      if (!traj[t - 1].allFinite() || traj[t - 1].norm() > kDivergenceGuard)
        throw InstabilityError("unconditional", t);
    }
  }
  return traj;
}

}  // namespace gdiff
