#pragma once

namespace diffnet {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile; p must lie in (0, 1).
double normal_quantile(double p);

/// Two-sided p-value 2(1 - Phi(|z|)).
double two_sided_p_value(double z);

} // namespace diffnet
