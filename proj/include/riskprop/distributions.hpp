#pragma once

#include <variant>

namespace riskprop {

// Mean and standard deviation of one random factor. Units follow the
// quantity the factor models (rate per hour, probability, dimensionless
// multiplier); sd is in the same units as mean.
struct MomentPair {
  double mean = 0.0;
  double sd = 0.0;

  bool operator==(const MomentPair&) const = default;
};

// Location and scale of ln(X) for a log-normal X.
struct LogNormalParams {
  double mu_log = 0.0;
  double sigma_log = 0.0;

  bool operator==(const LogNormalParams&) const = default;
};

// A deterministic factor.
struct PointMass {
  double value = 0.0;

  bool operator==(const PointMass&) const = default;
};

// Positive magnitude split as mantissa * 10^decade. Model files may use this
// form so decade bookkeeping stays exact at the I/O boundary; internal
// arithmetic is plain double.
struct Quantity {
  double mantissa = 1.0;  // in (0, 10)
  int decade = 0;

  double value() const;

  // Canonical form with mantissa in [1, 10). Idempotent.
  Quantity normalized() const;

  // Requires v > 0 and finite.
  static Quantity from_value(double v);

  bool operator==(const Quantity&) const = default;
};

// One random factor: a normal described by its moments, a log-normal
// described by its log-scale parameters, or a constant.
struct DistributionSpec {
  std::variant<MomentPair, LogNormalParams, PointMass> dist{MomentPair{}};

  static DistributionSpec normal(double mean, double sd) {
    return {MomentPair{mean, sd}};
  }
  static DistributionSpec lognormal(double mu_log, double sigma_log) {
    return {LogNormalParams{mu_log, sigma_log}};
  }
  static DistributionSpec point(double value) { return {PointMass{value}}; }

  bool is_normal() const { return std::holds_alternative<MomentPair>(dist); }
  bool is_lognormal() const {
    return std::holds_alternative<LogNormalParams>(dist);
  }
  bool is_point() const { return std::holds_alternative<PointMass>(dist); }

  // Exact mean/sd for any of the three kinds.
  MomentPair moments() const;

  // Log-normal view: log-normals pass through, normals with mean > 0 are
  // converted, point masses with value > 0 become (ln v, 0). Throws
  // DomainError otherwise.
  LogNormalParams as_lognormal() const;

  bool operator==(const DistributionSpec&) const = default;
};

// Log-normal parameters matching the given moments:
//   sigma'^2 = ln(1 + (sd/mean)^2),   mu' = ln(mean) - sigma'^2 / 2.
// Requires mean > 0 and sd >= 0.
LogNormalParams lognormal_from_moments(const MomentPair& m);

// Moments of a log-normal:
//   mean = exp(mu' + sigma'^2 / 2),
//   var  = exp(2 mu' + sigma'^2) (exp(sigma'^2) - 1).
MomentPair moments_from_lognormal(const LogNormalParams& p);

// Standard normal CDF, absolute error well under 1e-7.
double gaussian_cdf(double z);

// Standard normal quantile. Rational initial guess refined by one Halley
// step against gaussian_cdf. Requires p in (0, 1).
double gaussian_quantile(double p);

// Two-sided coverage factor: the q with P(|Z| <= q) = confidence.
double coverage_factor(double confidence);

}  // namespace riskprop
