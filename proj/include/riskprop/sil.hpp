#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "riskprop/distributions.hpp"

namespace riskprop {

// Safety-integrity decade band: the closed interval [10^-(x+1), 10^-x].
struct SilBand {
  int exponent = 0;

  double lower() const;
  double upper() const;

  bool operator==(const SilBand&) const = default;
};

// A band plus the confidence demanded of it. When the coverage factor q is
// absent it defaults to the two-sided Gaussian factor for the confidence.
struct SilTarget {
  SilBand band;
  double confidence = 0.9973;
  std::optional<double> q;

  double coverage() const;

  bool operator==(const SilTarget&) const = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const Interval&) const = default;
};

// Classification outcome. Coverage mode fills `interval` (mu -+ q sigma);
// exact mode fills `achieved_probability`. Margin is the signed distance
// from the nearer band edge, in band-mantissa units (scaled by 10^x), so
// margins are comparable across decades.
struct Verdict {
  bool met = false;
  std::optional<double> achieved_probability;
  std::optional<Interval> interval;
  double margin = 0.0;
  int band_exponent = 0;
  double q = 0.0;
  double confidence = 0.0;
};

// Class-width factors of a semi-quantitative scheme, e.g. sqrt(10) for the
// inputs and 10 for the results. Both must exceed 1.
struct CalibrationQuery {
  double input_class_factor = 0.0;
  double output_class_factor = 0.0;
};

struct CalibrationResult {
  double allowed_inflation = 0.0;  // band-width ratio in log space
  long max_operations = 0;         // largest k with sqrt(k+1) <= inflation
};

enum class Combinator { Sum, Product };
enum class ComposeMode { Coverage, Exact };

struct ComposeStep {
  std::string label;
  MomentPair component;
  MomentPair cumulative;
};

struct ComposeReport {
  Verdict verdict;
  MomentPair combined;
  std::optional<LogNormalParams> combined_lognormal;  // exact mode only
  std::vector<ComposeStep> steps;
};

// Coverage-interval test: met iff [mu - q sigma, mu + q sigma] lies inside
// the closed band.
Verdict classify_interval(const MomentPair& m, const SilTarget& t);

// Exact-mode test: achieved probability is CDF(upper) - CDF(lower) under
// the given distribution; met iff it reaches the target confidence. A zero
// scale parameter degenerates to a point-mass check against the closed band.
Verdict band_probability(const DistributionSpec& d, const SilTarget& t);

// Equal-sd input budget for a two-factor product with the given means:
// the boundary solution of (s^2)^2 + (mu_x^2 + mu_y^2) s^2 - target_sd^2 = 0.
double budget_product_inputs(double target_sd, double mu_x, double mu_y);

// Combine >= 2 component distributions with the given combinator and
// adjudicate the result against the target. Coverage mode folds moments;
// exact mode requires a product of log-normal-convertible components.
ComposeReport compose_check(
    const std::vector<std::pair<std::string, DistributionSpec>>& components,
    Combinator combinator, const SilTarget& t, ComposeMode mode);

// How much sd inflation a class scheme admits and how many operations fit
// into it: inflation = ln(output factor) / ln(input factor), and the largest
// k with sqrt(k+1) <= inflation.
CalibrationResult calibration_max_ops(const CalibrationQuery& c);

}  // namespace riskprop
