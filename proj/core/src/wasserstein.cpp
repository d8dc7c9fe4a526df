#include "gdiff/wasserstein.hpp"

#include <cmath>
#include <limits>

#include "gdiff/errors.hpp"

namespace gdiff {

namespace {

double clamp_eig(double v, const char* what) {
  if (v < -1e-10) throw SingularityError(std::string(what) + ": eigenvalue below -1e-10");
  return v > 0.0 ? v : 0.0;
}

}  // namespace

namespace {

using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

// PSD square root in extended precision. Eigenvalues in [-1e-10, 0) are
// clamped; positive values at the double-precision noise floor of the input
// are genuine zeros and clamped as well, so rank-deficient inputs keep exact
// null spaces.
MatL psd_sqrt_ext(const MatL& m) {
  Eigen::SelfAdjointEigenSolver<MatL> es(m);
  Eigen::Matrix<long double, Eigen::Dynamic, 1> ev = es.eigenvalues();
  const long double noise = ev.size() *
                            std::numeric_limits<double>::epsilon() *
                            std::max(ev.cwiseAbs().maxCoeff(), 0.0L);
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] < -1e-10L)
      throw SingularityError("wasserstein2: eigenvalue below -1e-10");
    ev[i] = ev[i] > noise ? sqrtl(ev[i]) : 0.0L;
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double wasserstein2(const GaussianLaw& a, const GaussianLaw& b) {
  if (a.dim() != b.dim()) throw ParameterError("wasserstein2: dimension mismatch");
  // The trace combination cancels almost exactly for nearby laws, so the
  // Bures term runs in extended precision, and its cross term is evaluated
  // as Tr (A^{1/2} B A^{1/2})^{1/2} = sum of singular values of
  // A^{1/2} B^{1/2}: forming the product matrix would square the dynamic
  // range and lose half the digits on near-null directions.
  MatL ca = a.cov.cast<long double>();
  MatL cb = b.cov.cast<long double>();
  MatL cross = psd_sqrt_ext(ca) * psd_sqrt_ext(cb);
  Eigen::JacobiSVD<MatL> svd(cross);
  long double bures = svd.singularValues().sum();
  long double sq = (a.mean - b.mean).cast<long double>().squaredNorm() +
                   ca.trace() + cb.trace() - 2.0L * bures;
  return static_cast<double>(sqrtl(std::max(sq, 0.0L)));
}

double wasserstein2_commuting(const Eigen::VectorXd& mean_a,
                              const Eigen::VectorXd& eig_a,
                              const Eigen::VectorXd& mean_b,
                              const Eigen::VectorXd& eig_b) {
  if (mean_a.size() != mean_b.size() || eig_a.size() != eig_b.size())
    throw ParameterError("wasserstein2_commuting: dimension mismatch");
  double sq = (mean_a - mean_b).squaredNorm();
  for (int i = 0; i < eig_a.size(); ++i) {
    double la = clamp_eig(eig_a[i], "wasserstein2_commuting");
    double lb = clamp_eig(eig_b[i], "wasserstein2_commuting");
    double d = std::sqrt(la) - std::sqrt(lb);
    sq += d * d;
  }
  return std::sqrt(sq);
}

std::pair<double, double> wasserstein2_split(
    const Eigen::VectorXd& mean_a, const Eigen::VectorXd& eig_a,
    const Eigen::VectorXd& mean_b, const Eigen::VectorXd& eig_b,
    const std::vector<bool>& kernel_mask) {
  if (eig_a.size() != eig_b.size() ||
      static_cast<int>(kernel_mask.size()) != eig_a.size())
    throw ParameterError("wasserstein2_split: mask/eigenvalue length mismatch");
  if (mean_a.size() != mean_b.size() || mean_a.size() != eig_a.size())
    throw ParameterError("wasserstein2_split: mean length mismatch");
  double ker = 0.0, perp = 0.0;
  for (int i = 0; i < eig_a.size(); ++i) {
    double la = clamp_eig(eig_a[i], "wasserstein2_split");
    double lb = clamp_eig(eig_b[i], "wasserstein2_split");
    double d = std::sqrt(la) - std::sqrt(lb);
    double dm = mean_a[i] - mean_b[i];
    (kernel_mask[i] ? ker : perp) += d * d + dm * dm;
  }
  return {std::sqrt(ker), std::sqrt(perp)};
}

}  // namespace gdiff
