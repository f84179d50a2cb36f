#pragma once

namespace covsync {

/// P(Z <= x) for standard normal, accurate in both tails.
double normal_cdf(double x);

/// P(Z > x), the survival function.
double normal_sf(double x);

/// Inverse of normal_cdf on (0,1).
double normal_quantile(double u);

/// Inverse error function on (-1,1); rational initial guess refined by
/// Newton iterations to full double precision.
double inverse_erf(double p);

}  // namespace covsync
