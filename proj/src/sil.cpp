#include "riskprop/sil.hpp"

#include <cmath>
#include <string>

#include "riskprop/errors.hpp"
#include "riskprop/propagation.hpp"

namespace riskprop {

namespace {

// Comparisons against band edges run in band-mantissa units (the band is
// [0.1, 1.0] after scaling by 10^x) with a small guard that absorbs
// decade-scaling rounding at tangent edges.
constexpr double kEdgeTol = 1e-12;

}  // namespace

double SilBand::lower() const { return std::pow(10.0, -(exponent + 1)); }

double SilBand::upper() const { return std::pow(10.0, -exponent); }

double SilTarget::coverage() const {
  if (q) {
    if (!(*q > 0.0)) throw DomainError("coverage factor q must be positive");
    return *q;
  }
  return coverage_factor(confidence);
}

Verdict classify_interval(const MomentPair& m, const SilTarget& t) {
  if (m.sd < 0.0) throw DomainError("standard deviation must be nonnegative");
  double q = t.coverage();
  double scale = std::pow(10.0, t.band.exponent);
  double lo = m.mean - q * m.sd;
  double hi = m.mean + q * m.sd;

  Verdict v;
  v.interval = Interval{lo, hi};
  double lo_slack = lo * scale - 0.1;
  double hi_slack = 1.0 - hi * scale;
  v.met = lo_slack >= -kEdgeTol && hi_slack >= -kEdgeTol;
  v.margin = std::min(lo_slack, hi_slack);
  v.band_exponent = t.band.exponent;
  v.q = q;
  v.confidence = t.confidence;
  return v;
}

namespace {

double point_band_probability(double value, double lower, double upper) {
  bool inside = value >= lower * (1.0 - kEdgeTol) &&
                value <= upper * (1.0 + kEdgeTol);
  return inside ? 1.0 : 0.0;
}

}  // namespace

Verdict band_probability(const DistributionSpec& d, const SilTarget& t) {
  double lower = t.band.lower();
  double upper = t.band.upper();

  double p;
  if (const auto* n = std::get_if<MomentPair>(&d.dist)) {
    if (n->sd < 0.0) throw DomainError("standard deviation must be nonnegative");
    if (n->sd == 0.0) {
      p = point_band_probability(n->mean, lower, upper);
    } else {
      p = gaussian_cdf((upper - n->mean) / n->sd) -
          gaussian_cdf((lower - n->mean) / n->sd);
    }
  } else if (const auto* l = std::get_if<LogNormalParams>(&d.dist)) {
    if (l->sigma_log < 0.0) throw DomainError("sigma_log must be nonnegative");
    if (l->sigma_log == 0.0) {
      p = point_band_probability(std::exp(l->mu_log), lower, upper);
    } else {
      p = gaussian_cdf((std::log(upper) - l->mu_log) / l->sigma_log) -
          gaussian_cdf((std::log(lower) - l->mu_log) / l->sigma_log);
    }
  } else {
    p = point_band_probability(std::get<PointMass>(d.dist).value, lower, upper);
  }

  Verdict v;
  v.achieved_probability = p;
  v.met = p >= t.confidence;
  // Margin: distance of the distribution mean from the nearer band edge.
  double scale = std::pow(10.0, t.band.exponent);
  double mean = d.moments().mean;
  v.margin = std::min(mean * scale - 0.1, 1.0 - mean * scale);
  v.band_exponent = t.band.exponent;
  v.q = t.coverage();
  v.confidence = t.confidence;
  return v;
}

double budget_product_inputs(double target_sd, double mu_x, double mu_y) {
  if (target_sd < 0.0) throw DomainError("target sd must be nonnegative");
  if (mu_x < 0.0 || mu_y < 0.0) throw DomainError("means must be nonnegative");
  double b = mu_x * mu_x + mu_y * mu_y;
  double t2 = target_sd * target_sd;
  // Positive root of (s^2)^2 + b s^2 - t^2 = 0, written without cancellation.
  double sigma2 = 2.0 * t2 / (b + std::sqrt(b * b + 4.0 * t2));
  if (t2 == 0.0) sigma2 = 0.0;
  return std::sqrt(sigma2);
}

ComposeReport compose_check(
    const std::vector<std::pair<std::string, DistributionSpec>>& components,
    Combinator combinator, const SilTarget& t, ComposeMode mode) {
  if (components.size() < 2) {
    throw DomainError("composition requires >= 2 components");
  }
  if (mode == ComposeMode::Exact && combinator == Combinator::Sum) {
    throw UnsupportedError(
        "exact mode supports product composition only (sums have no "
        "closed-form log-normal)");
  }

  ComposeReport report;
  if (mode == ComposeMode::Coverage) {
    MomentPair acc;
    bool started = false;
    for (const auto& [label, spec] : components) {
      MomentPair part = spec.moments();
      if (!started) {
        acc = part;
        started = true;
      } else {
        MomentPair operands[2] = {acc, part};
        acc = combinator == Combinator::Sum ? sum_moments(operands)
                                            : product_moments(operands);
      }
      report.steps.push_back({label, part, acc});
    }
    report.combined = acc;
    report.verdict = classify_interval(acc, t);
  } else {
    LogNormalParams acc{0.0, 0.0};
    double sigma2 = 0.0;
    for (const auto& [label, spec] : components) {
      LogNormalParams part = spec.as_lognormal();
      acc.mu_log += part.mu_log;
      sigma2 += part.sigma_log * part.sigma_log;
      acc.sigma_log = std::sqrt(sigma2);
      report.steps.push_back(
          {label, spec.moments(), moments_from_lognormal(acc)});
    }
    report.combined = moments_from_lognormal(acc);
    report.combined_lognormal = acc;
    report.verdict = band_probability(DistributionSpec{acc}, t);
  }
  return report;
}

CalibrationResult calibration_max_ops(const CalibrationQuery& c) {
  if (!(c.input_class_factor > 1.0)) {
    throw DomainError("input class factor must exceed 1");
  }
  if (!(c.output_class_factor > 1.0)) {
    throw DomainError("output class factor must exceed 1");
  }
  CalibrationResult r;
  r.allowed_inflation =
      std::log(c.output_class_factor) / std::log(c.input_class_factor);
  // Largest k with sqrt(k+1) <= inflation; the epsilon absorbs the log
  // rounding when the ratio is an exact integer.
  double k = std::floor(r.allowed_inflation * r.allowed_inflation - 1.0 + 1e-9);
  r.max_operations = k > 0.0 ? static_cast<long>(k) : 0;
  return r;
}

}  // namespace riskprop
