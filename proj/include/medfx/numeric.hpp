#pragma once

#include <algorithm>
#include <cmath>

namespace medfx {

/// Treatment arms. The contrast level a is coded 1, the reference level a* is 0.
inline constexpr int kTreated = 1;
inline constexpr int kControl = 0;

/// Bound used when a probability has to pass through a logit.
inline constexpr double kLogitNudge = 1e-6;

inline double expit(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// logit after clamping into [nudge, 1 - nudge]; exact 0/1 outcomes never reach log(0).
inline double safe_logit(double p, double nudge = kLogitNudge) {
  return logit(std::clamp(p, nudge, 1.0 - nudge));
}

/// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// Upper quantile z_{1-alpha/2} of the standard normal.
double normal_critical_value(double alpha);

/// Two-sided p-value of a standard normal statistic.
double two_sided_p_value(double z);

}  // namespace medfx
