#include "gdiff/schedule.hpp"

#include <cmath>

#include "gdiff/errors.hpp"

namespace gdiff {

Schedule Schedule::linear(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw ParameterError("schedule: steps must be >= 1");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
    throw ParameterError("schedule: need 0 < beta_start <= beta_end < 1");

  Schedule s;
  s.betas_.resize(steps);
  s.alpha_bars_.resize(steps + 1);
  s.sqrt_alpha_bars_.resize(steps + 1);
  s.alpha_bars_[0] = 1.0;
  s.sqrt_alpha_bars_[0] = 1.0;

  // Running product in extended precision; alpha_bar_T sits near 4e-5 for the
  // reference 1000-step schedule and double accumulation alone drifts there.
  long double prod = 1.0L;
  for (int t = 1; t <= steps; ++t) {
    double beta =
        steps == 1 ? beta_start
                   : beta_start + (beta_end - beta_start) *
                                      (static_cast<double>(t - 1) /
                                       static_cast<double>(steps - 1));
    if (t == steps) beta = beta_end;
    s.betas_[t - 1] = beta;
    prod *= (1.0L - static_cast<long double>(beta));
    s.alpha_bars_[t] = static_cast<double>(prod);
    s.sqrt_alpha_bars_[t] = static_cast<double>(sqrtl(prod));
  }
  return s;
}

double Schedule::beta(int t) const {
  if (t < 1 || t > steps()) throw ParameterError("schedule: t out of [1,T]");
  return betas_[t - 1];
}

double Schedule::alpha(int t) const { return 1.0 - beta(t); }

double Schedule::alpha_bar(int t) const {
  if (t < 0 || t > steps()) throw ParameterError("schedule: t out of [0,T]");
  return alpha_bars_[t];
}

double Schedule::sqrt_alpha_bar(int t) const {
  if (t < 0 || t > steps()) throw ParameterError("schedule: t out of [0,T]");
  return sqrt_alpha_bars_[t];
}

}  // namespace gdiff
