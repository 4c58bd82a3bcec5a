#include "riskprop/propagation.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "riskprop/errors.hpp"

namespace riskprop {

MomentPair sum_moments(std::span<const MomentPair> terms) {
  if (terms.empty()) throw DomainError("sum_moments requires >= 1 term");
  double mean = 0.0;
  double var = 0.0;
  for (const auto& t : terms) {
    mean += t.mean;
    var += t.sd * t.sd;
  }
  return {mean, std::sqrt(var)};
}

MomentPair product_moments(std::span<const MomentPair> factors) {
  if (factors.empty()) throw DomainError("product_moments requires >= 1 factor");
  double mean = 1.0;
  double var = 0.0;
  for (const auto& f : factors) {
    double fvar = f.sd * f.sd;
    var = var * fvar + mean * mean * fvar + f.mean * f.mean * var;
    mean *= f.mean;
  }
  return {mean, std::sqrt(var)};
}

namespace {

MomentPair propagate_expr(const RiskExpr& e, const RiskModel& m) {
  if (const auto* leaf = std::get_if<LeafNode>(&e.node)) {
    return m.variables.at(leaf->id).moments();
  }
  const auto* sum = std::get_if<SumNode>(&e.node);
  const auto& children =
      sum ? sum->children : std::get<ProductNode>(e.node).children;
  std::vector<MomentPair> parts;
  parts.reserve(children.size());
  for (const auto& c : children) parts.push_back(propagate_expr(c, m));
  return sum ? sum_moments(parts) : product_moments(parts);
}

LogNormalParams propagate_log_expr(const RiskExpr& e, const RiskModel& m,
                                   const std::string& path) {
  if (const auto* leaf = std::get_if<LeafNode>(&e.node)) {
    try {
      return m.variables.at(leaf->id).as_lognormal();
    } catch (const DomainError& err) {
      throw DomainError("variable '" + leaf->id.name + "': " + err.what());
    }
  }
  if (std::holds_alternative<SumNode>(e.node)) {
    throw UnsupportedError(
        "log-normal mode does not support sum nodes (at " + path + ")");
  }
  const auto& children = std::get<ProductNode>(e.node).children;
  double mu = 0.0;
  double sigma2 = 0.0;
  for (std::size_t i = 0; i < children.size(); ++i) {
    LogNormalParams p = propagate_log_expr(
        children[i], m, path + "/product/" + std::to_string(i));
    mu += p.mu_log;
    sigma2 += p.sigma_log * p.sigma_log;
  }
  return {mu, std::sqrt(sigma2)};
}

}  // namespace

MomentPair propagate_moments(const RiskModel& m) {
  require_valid(m);
  return propagate_expr(m.expression, m);
}

LogNormalParams propagate_lognormal(const RiskModel& m) {
  require_valid(m);
  return propagate_log_expr(m.expression, m, "/expression");
}

double sqrt_n_budget(long contributors, double target_sd) {
  if (contributors < 1) throw DomainError("contributor count must be >= 1");
  if (target_sd < 0.0) throw DomainError("target sd must be nonnegative");
  return target_sd / std::sqrt(static_cast<double>(contributors));
}

double op_chain_inflation(long operations, InflationMode mode) {
  if (operations < 0) throw DomainError("operation count must be >= 0");
  if (mode == InflationMode::Exact) {
    return std::sqrt(static_cast<double>(operations) + 1.0) - 1.0;
  }
  if (operations == 0) return 0.0;
  return 0.5 + 0.3 * static_cast<double>(operations - 1);
}

ChainSpec chain_spec(const RiskModel& m) {
  ChainSpec spec;
  if (const auto* sum = std::get_if<SumNode>(&m.expression.node)) {
    spec.contributors = static_cast<long>(sum->children.size());
  }
  spec.operations =
      static_cast<long>(leaf_variables(m.expression).size()) - 1;
  return spec;
}

}  // namespace riskprop
