#include "covsync/gauss.hpp"

#include <cmath>
#include <limits>

#include "covsync/error.hpp"

namespace covsync {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kHalfSqrtPi = 0.8862269254527580;  // sqrt(pi)/2
}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x / kSqrt2); }

double inverse_erf(double p) {
  if (!(p > -1.0 && p < 1.0)) throw ParameterError("inverse_erf: argument outside (-1,1)");
  if (p == 0.0) return 0.0;

  // Initial guess: Giles' central/tail polynomials in w = -log(1-p^2).
  double w = -std::log((1.0 - p) * (1.0 + p));
  double x;
  if (w < 5.0) {
    w -= 2.5;
    x = 2.81022636e-08;
    x = 3.43273939e-07 + x * w;
    x = -3.5233877e-06 + x * w;
    x = -4.39150654e-06 + x * w;
    x = 0.00021858087 + x * w;
    x = -0.00125372503 + x * w;
    x = -0.00417768164 + x * w;
    x = 0.246640727 + x * w;
    x = 1.50140941 + x * w;
  } else {
    w = std::sqrt(w) - 3.0;
    x = -0.000200214257;
    x = 0.000100950558 + x * w;
    x = 0.00134934322 + x * w;
    x = -0.00367342844 + x * w;
    x = 0.00573950773 + x * w;
    x = -0.0076224613 + x * w;
    x = 0.00943887047 + x * w;
    x = 1.00167406 + x * w;
    x = 2.83297682 + x * w;
  }
  x *= p;

  // Newton refinement.  Near |p| = 1 the residual erf(x) - p cancels badly,
  // so iterate on the complement erfc(x) = 1 - p instead.
  const bool tail = std::abs(p) > 0.99;
  const double q = 1.0 - std::abs(p);
  const double s = p < 0 ? -1.0 : 1.0;
  double ax = std::abs(x);
  for (int it = 0; it < 3; ++it) {
    const double e = tail ? (std::erfc(ax) - q) : (std::erf(ax) - std::abs(p));
    const double step = e * kHalfSqrtPi * std::exp(ax * ax);
    ax += tail ? step : -step;
  }
  return s * ax;
}

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw ParameterError("normal_quantile: argument outside (0,1)");

  // Acklam's rational approximation.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (u < plow) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - plow) {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // One Halley step with a tail-stable residual.
  const double cdf = x < 0 ? 0.5 * std::erfc(-x / kSqrt2) : 1.0 - 0.5 * std::erfc(x / kSqrt2);
  const double resid = x < 0 ? (cdf - u) : ((1.0 - u) - (1.0 - cdf));
  const double pdf = std::exp(-0.5 * x * x) / 2.5066282746310002;
  if (pdf > 0.0) {
    const double delta = resid / pdf;
    x -= delta / (1.0 + 0.5 * x * delta);
  }
  return x;
}

}  // namespace covsync
