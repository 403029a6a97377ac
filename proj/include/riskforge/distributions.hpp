#pragma once

// Standard normal helpers used by the Gaussian copula. Moments, CDFs and
// inverse CDFs of UncertainQuantity live in distributions.cpp as well.

namespace riskforge {

double normal_cdf(double z);
/// Inverse of the standard normal CDF for u in (0, 1).
double normal_quantile(double u);

}  // namespace riskforge
