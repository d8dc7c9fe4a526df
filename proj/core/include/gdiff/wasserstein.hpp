#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "gdiff/gaussian.hpp"

namespace gdiff {

/// 2-Wasserstein distance between Gaussian laws:
/// W2^2 = |mu_a - mu_b|^2
///      + Tr(S_a + S_b - 2 (S_a^{1/2} S_b S_a^{1/2})^{1/2}).
double wasserstein2(const GaussianLaw& a, const GaussianLaw& b);

/// W2 for simultaneously diagonalizable covariances with eigenvalues given in
/// a shared eigenbasis: W2^2 = |mu_a - mu_b|^2 + sum_i (sqrt l_ia - sqrt l_ib)^2.
/// Eigenvalues in [-1e-10, 0) are clamped; below that is an error.
double wasserstein2_commuting(const Eigen::VectorXd& mean_a,
                              const Eigen::VectorXd& eig_a,
                              const Eigen::VectorXd& mean_b,
                              const Eigen::VectorXd& eig_b);

/// Splits the commuting-formula distance across a per-eigendirection mask.
/// Means are given in the shared eigenbasis coordinates; masked directions
/// are those where the reference covariance has a null eigenvalue, so there
/// the per-direction term reduces to lambda_b. Returns (w_ker, w_perp) with
/// w_ker^2 + w_perp^2 equal to the full squared distance.
std::pair<double, double> wasserstein2_split(const Eigen::VectorXd& mean_a,
                                             const Eigen::VectorXd& eig_a,
                                             const Eigen::VectorXd& mean_b,
                                             const Eigen::VectorXd& eig_b,
                                             const std::vector<bool>& kernel_mask);

}  // namespace gdiff
