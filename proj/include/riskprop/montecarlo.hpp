#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskprop/propagation.hpp"
#include "riskprop/riskmodel.hpp"

namespace riskprop {

struct GridSpec {
  double min = 0.0;
  double max = 1.0;
  int points = 512;

  bool operator==(const GridSpec&) const = default;
};

struct SimConfig {
  std::int64_t samples = 10000;  // >= 2
  std::uint64_t seed = 0;
  std::optional<GridSpec> grid;
  std::optional<double> bandwidth;  // KDE bandwidth override, > 0
};

// Summary statistics with the n-1 sd denominator; skewness is the
// dimensionless third-moment statistic m3 / m2^(3/2) (0 when m2 = 0).
struct SampleStats {
  std::int64_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double skewness = 0.0;
};

struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
};

struct LabeledCurve {
  std::string id;
  DensityCurve curve;
};

struct SimResult {
  SampleStats stats;
  std::vector<double> samples;
};

// Deterministic sampling streams.
//
// Every unit draw is a pure hash of (seed, sample index, draw slot), so a
// run is a function of (model, config) alone: evaluation order and any
// partitioning of the index range across workers cannot change it, and
// seeds are portable across implementations of the same contract. Each
// declared variable owns two slots per sample, by sorted-name position v:
// slots 2v and 2v+1. Box-Muller turns the two unit draws into one Gaussian
// deviate. Point masses own their slots but never consume them.
namespace rng {

std::uint64_t mix64(std::uint64_t x);
std::uint64_t draw_bits(std::uint64_t seed, std::uint64_t sample,
                        std::uint64_t slot);
double unit_open(std::uint64_t bits);  // maps to (0, 1)
double gaussian(std::uint64_t seed, std::uint64_t sample,
                std::uint64_t var_index);

}  // namespace rng

// Draw cfg.samples evaluations of the model. Normal variables sample
// mean + sd * z, log-normal variables exp(mu' + sigma' * z), point masses
// their value; the expression tree is then evaluated arithmetically.
SimResult simulate(const RiskModel& m, const SimConfig& cfg);

SampleStats summarize(std::span<const double> samples);

// Gaussian-kernel density estimate. Bandwidth from cfg when given, else
// Silverman's rule 0.9 * min(sd, IQR/1.34) * n^(-1/5) (falling back to sd
// when the IQR is degenerate). Default grid spans
// [min - 3h, max + 3h] with 512 points. Requires >= 2 samples with spread.
DensityCurve kde(std::span<const double> samples, const SimConfig& cfg);

// Figure-style overlay on one shared grid:
//   kde                  the sample density,
//   propagated_normal    normal with the propagated moments,
//   reference_normal     normal with the propagated mean and the first
//                        factor's relative sd (omitted if degenerate),
//   propagated_lognormal log-normal density (log-normal mode only; the
//                        expression must be a pure product).
std::vector<LabeledCurve> overlay_curves(const RiskModel& m,
                                         const SimConfig& cfg,
                                         PropagationMode mode);

// CSV export: `value` column for samples, `x,density,curve_id` for curves.
// '.' decimal separator and '\n' line endings regardless of locale.
void write_samples_csv(std::ostream& os, std::span<const double> samples);
void write_curves_csv(std::ostream& os, std::span<const LabeledCurve> curves);

// Shortest round-trip representation, locale-independent.
std::string format_double(double v);

}  // namespace riskprop
