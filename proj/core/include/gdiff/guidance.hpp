#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>
#include <vector>

#include "gdiff/gaussian.hpp"
#include "gdiff/random.hpp"
#include "gdiff/schedule.hpp"

namespace gdiff {

/// Guidance models: each fixes the covariance C_{v|t} used for the noisy
/// likelihood inside the conditional backward step.
struct DpsGuidance {
  double alpha;  // required, > 0; C_{v|t} = sigma^2 / alpha I
};
struct PiGdmGuidance {};  // C_{v|t} = (1-alpha_bar_t) A A' + sigma^2 I
struct CgdmGuidance {};   // C_{v|t} = (1-alpha_bar_t) A S S_t^-1 A' + sigma^2 I

using GuidanceModel = std::variant<DpsGuidance, PiGdmGuidance, CgdmGuidance>;

std::string model_name(const GuidanceModel& model);
GuidanceModel model_from_name(const std::string& name, double alpha_dps);

/// C_{v|t} for the given model; symmetric positive definite for sigma > 0.
Eigen::MatrixXd guidance_covariance(const GuidanceModel& model,
                                    const GaussianLaw& prior,
                                    const LinearInverseProblem& prob,
                                    const Schedule& sched, int t);

/// One conditional backward step written as an affine map:
/// y_{t-1} = lin y_t + shift + sqrt(noise_var) z.
struct BackwardAffineStep {
  Eigen::MatrixXd lin;
  Eigen::VectorXd shift;
  double noise_var = 0.0;  // beta_t
};

BackwardAffineStep backward_affine_step(const GuidanceModel& model,
                                        const GaussianLaw& prior,
                                        const LinearInverseProblem& prob,
                                        const Schedule& sched, int t);

/// All steps for t = T..1; result[t-1] is the step taking y_t to y_{t-1}.
std::vector<BackwardAffineStep> backward_affine_sequence(
    const GuidanceModel& model, const GaussianLaw& prior,
    const LinearInverseProblem& prob, const Schedule& sched);

/// Conditional backward trajectory; traj[t] = y_t for t = 0..T.
/// Aborts with InstabilityError if any state norm exceeds 1e12.
std::vector<Eigen::VectorXd> simulate_conditional(
    const GuidanceModel& model, const GaussianLaw& prior,
    const LinearInverseProblem& prob, const Schedule& sched,
    RandomStream& rng);

/// Same, from precomputed affine steps (for repeated Monte-Carlo runs).
std::vector<Eigen::VectorXd> simulate_conditional(
    const std::vector<BackwardAffineStep>& steps, const std::string& model,
    const Schedule& sched, RandomStream& rng);

enum class Direction { kForward, kBackward };

/// Unconditional DDPM trajectory; traj[t] = state at diffusion time t.
/// Forward starts from a prior sample; backward from y_T ~ N(0, I) with the
/// exact Gaussian score.
std::vector<Eigen::VectorXd> simulate_unconditional(const GaussianLaw& prior,
                                                    const Schedule& sched,
                                                    RandomStream& rng,
                                                    Direction direction);

}  // namespace gdiff
