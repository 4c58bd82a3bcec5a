#include "riskprop/distributions.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "riskprop/errors.hpp"

namespace riskprop {

double Quantity::value() const { return mantissa * std::pow(10.0, decade); }

Quantity Quantity::normalized() const { return from_value(value()); }

Quantity Quantity::from_value(double v) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw DomainError("quantity value must be positive and finite, got " +
                      std::to_string(v));
  }
  int e = static_cast<int>(std::floor(std::log10(v)));
  double m = v / std::pow(10.0, e);
  // log10/pow rounding can land the mantissa just outside [1, 10).
  while (m >= 10.0) {
    m /= 10.0;
    ++e;
  }
  while (m < 1.0) {
    m *= 10.0;
    --e;
  }
  return {m, e};
}

MomentPair DistributionSpec::moments() const {
  if (const auto* n = std::get_if<MomentPair>(&dist)) return *n;
  if (const auto* l = std::get_if<LogNormalParams>(&dist)) {
    return moments_from_lognormal(*l);
  }
  return MomentPair{std::get<PointMass>(dist).value, 0.0};
}

LogNormalParams DistributionSpec::as_lognormal() const {
  if (const auto* l = std::get_if<LogNormalParams>(&dist)) return *l;
  if (const auto* n = std::get_if<MomentPair>(&dist)) {
    return lognormal_from_moments(*n);
  }
  double v = std::get<PointMass>(dist).value;
  if (!(v > 0.0)) {
    throw DomainError("point mass must be positive for the log-normal view");
  }
  return {std::log(v), 0.0};
}

LogNormalParams lognormal_from_moments(const MomentPair& m) {
  if (!(m.mean > 0.0)) {
    throw DomainError("log-normal conversion requires mean > 0");
  }
  if (m.sd < 0.0) {
    throw DomainError("standard deviation must be nonnegative");
  }
  double ratio = m.sd / m.mean;
  double sigma2 = std::log1p(ratio * ratio);
  return {std::log(m.mean) - 0.5 * sigma2, std::sqrt(sigma2)};
}

MomentPair moments_from_lognormal(const LogNormalParams& p) {
  double sigma2 = p.sigma_log * p.sigma_log;
  double mean = std::exp(p.mu_log + 0.5 * sigma2);
  return {mean, mean * std::sqrt(std::expm1(sigma2))};
}

double gaussian_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

namespace {

// Rational approximation for the inverse normal CDF (P. Acklam's
// coefficients), |relative error| < 1.2e-9 before refinement.
double quantile_estimate(double p) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  auto tail = [](double q) {
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  };

  if (p < p_low) {
    return tail(std::sqrt(-2.0 * std::log(p)));
  }
  if (p > 1.0 - p_low) {
    return -tail(std::sqrt(-2.0 * std::log1p(-p)));
  }
  double q = p - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double gaussian_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("gaussian_quantile requires p in (0, 1)");
  }
  double x = quantile_estimate(p);
  // One Halley step against the exact CDF.
  double e = gaussian_cdf(x) - p;
  double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double coverage_factor(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw DomainError("confidence must lie in (0, 1)");
  }
  return gaussian_quantile(0.5 * (1.0 + confidence));
}

}  // namespace riskprop
