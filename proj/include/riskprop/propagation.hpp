#pragma once

#include <span>

#include "riskprop/distributions.hpp"
#include "riskprop/riskmodel.hpp"

namespace riskprop {

enum class PropagationMode { Normal, LogNormal };

// Shape of a propagation chain: n summed contributors, k multiplicative
// operations.
struct ChainSpec {
  long contributors = 1;  // >= 1
  long operations = 0;    // >= 0
};

enum class InflationMode { Exact, RuleOfThumb };

// Mean and sd of a sum of independent terms: means add, variances add.
MomentPair sum_moments(std::span<const MomentPair> terms);

// Mean and sd of a product of independent factors, by folding
//   var(XY) = sd_X^2 sd_Y^2 + mean_X^2 sd_Y^2 + mean_Y^2 sd_X^2
// left to right. Exact for independent factors with finite second moments,
// whatever the distribution family.
MomentPair product_moments(std::span<const MomentPair> factors);

// Exact first and second moments of the whole expression tree. Leaves
// contribute their declared moments (point masses as sd 0).
MomentPair propagate_moments(const RiskModel& m);

// Log-parameter propagation for pure products: mu' values add and
// sigma'^2 values add across factors. Sum nodes are refused
// (UnsupportedError naming the node path) and every factor must be
// log-normal-convertible.
LogNormalParams propagate_lognormal(const RiskModel& m);

// Per-contributor sd that keeps an n-term sum at target_sd: target / sqrt(n).
double sqrt_n_budget(long contributors, double target_sd);

// Relative sd increase after k operations on comparable factors.
// Exact mode: sqrt(k+1) - 1. Rule of thumb: 0.5 for the first operation
// plus 0.3 for each additional one.
double op_chain_inflation(long operations, InflationMode mode);

// Chain shape of a model: contributors = fan-out of a root sum (1
// otherwise), operations = leaf count - 1.
ChainSpec chain_spec(const RiskModel& m);

}  // namespace riskprop
