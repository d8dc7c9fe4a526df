#pragma once

#include <vector>

namespace gdiff {

/// Discrete DDPM noise schedule: beta_t for t = 1..T, alpha_t = 1 - beta_t,
/// and the cumulative products alpha_bar_t = prod_{s<=t} alpha_s with
/// alpha_bar_0 = 1. Immutable after construction.
class Schedule {
public:
  /// Linear schedule: beta_t interpolated over t = 1..T with both endpoints
  /// included (beta_1 = beta_start, beta_T = beta_end exactly).
  /// Requires steps >= 1 and 0 < beta_start <= beta_end < 1.
  static Schedule linear(int steps, double beta_start, double beta_end);

  int steps() const { return static_cast<int>(betas_.size()); }

  /// beta_t, valid for t in [1, T].
  double beta(int t) const;
  /// alpha_t = 1 - beta_t, valid for t in [1, T].
  double alpha(int t) const;
  /// alpha_bar_t, valid for t in [0, T]; alpha_bar_0 = 1.
  double alpha_bar(int t) const;
  double sqrt_alpha_bar(int t) const;
  /// Variance of the noise injected by one backward step (beta_t).
  double step_noise_var(int t) const { return beta(t); }

private:
  Schedule() = default;
  std::vector<double> betas_;
  std::vector<double> alpha_bars_;       // index t, size T+1
  std::vector<double> sqrt_alpha_bars_;  // index t, size T+1
};

}  // namespace gdiff
