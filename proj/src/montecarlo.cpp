#include "riskprop/montecarlo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <variant>

#include "riskprop/errors.hpp"

namespace riskprop {

namespace rng {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t draw_bits(std::uint64_t seed, std::uint64_t sample,
                        std::uint64_t slot) {
  return mix64(mix64(mix64(seed) ^ sample) ^ slot);
}

double unit_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double gaussian(std::uint64_t seed, std::uint64_t sample,
                std::uint64_t var_index) {
  double u1 = unit_open(draw_bits(seed, sample, 2 * var_index));
  double u2 = unit_open(draw_bits(seed, sample, 2 * var_index + 1));
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace rng

namespace {

void check_config(const SimConfig& cfg) {
  if (cfg.samples < 2) throw DomainError("sample count must be >= 2");
  if (cfg.grid) {
    if (!(cfg.grid->min < cfg.grid->max)) {
      throw DomainError("grid min must be below grid max");
    }
    if (cfg.grid->points < 2) throw DomainError("grid needs >= 2 points");
  }
  if (cfg.bandwidth && !(*cfg.bandwidth > 0.0)) {
    throw DomainError("bandwidth must be positive");
  }
}

enum class VarKind { Normal, LogNormal, Point };

struct CompiledVar {
  VarKind kind;
  double p0;  // mean / mu_log / value
  double p1;  // sd / sigma_log / unused
};

// Expression with leaves resolved to sorted-variable indices.
struct EvalNode {
  enum class Op { Leaf, Sum, Product } op;
  std::size_t var_index = 0;
  std::vector<EvalNode> children;
};

struct CompiledModel {
  std::vector<CompiledVar> vars;  // sorted by variable name
  EvalNode root;
};

EvalNode compile_expr(const RiskExpr& e,
                      const std::map<VariableId, std::size_t>& index) {
  if (const auto* leaf = std::get_if<LeafNode>(&e.node)) {
    return {EvalNode::Op::Leaf, index.at(leaf->id), {}};
  }
  const auto* sum = std::get_if<SumNode>(&e.node);
  const auto& children =
      sum ? sum->children : std::get<ProductNode>(e.node).children;
  EvalNode node{sum ? EvalNode::Op::Sum : EvalNode::Op::Product, 0, {}};
  node.children.reserve(children.size());
  for (const auto& c : children) node.children.push_back(compile_expr(c, index));
  return node;
}

CompiledModel compile(const RiskModel& m) {
  CompiledModel cm;
  std::map<VariableId, std::size_t> index;
  for (const auto& [id, spec] : m.variables) {
    index.emplace(id, cm.vars.size());
    if (const auto* n = std::get_if<MomentPair>(&spec.dist)) {
      cm.vars.push_back({VarKind::Normal, n->mean, n->sd});
    } else if (const auto* l = std::get_if<LogNormalParams>(&spec.dist)) {
      cm.vars.push_back({VarKind::LogNormal, l->mu_log, l->sigma_log});
    } else {
      cm.vars.push_back(
          {VarKind::Point, std::get<PointMass>(spec.dist).value, 0.0});
    }
  }
  cm.root = compile_expr(m.expression, index);
  return cm;
}

double eval(const EvalNode& node, std::span<const double> values) {
  switch (node.op) {
    case EvalNode::Op::Leaf:
      return values[node.var_index];
    case EvalNode::Op::Sum: {
      double acc = 0.0;
      for (const auto& c : node.children) acc += eval(c, values);
      return acc;
    }
    case EvalNode::Op::Product: {
      double acc = 1.0;
      for (const auto& c : node.children) acc *= eval(c, values);
      return acc;
    }
  }
  return 0.0;
}

double normal_pdf(double x, double mean, double sd) {
  double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

double lognormal_pdf(double x, const LogNormalParams& p) {
  if (!(x > 0.0)) return 0.0;
  double z = (std::log(x) - p.mu_log) / p.sigma_log;
  return std::exp(-0.5 * z * z) /
         (x * p.sigma_log * std::sqrt(2.0 * std::numbers::pi));
}

// Type-7 quantile (linear interpolation between order statistics).
double quantile_sorted(std::span<const double> sorted, double p) {
  double h = p * static_cast<double>(sorted.size() - 1);
  auto i = static_cast<std::size_t>(h);
  if (i + 1 >= sorted.size()) return sorted.back();
  double frac = h - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

std::vector<double> make_grid(double min, double max, int points) {
  std::vector<double> grid(static_cast<std::size_t>(points));
  double step = (max - min) / static_cast<double>(points - 1);
  for (int i = 0; i < points; ++i) {
    grid[static_cast<std::size_t>(i)] = min + step * i;
  }
  return grid;
}

}  // namespace

SimResult simulate(const RiskModel& m, const SimConfig& cfg) {
  require_valid(m);
  check_config(cfg);
  CompiledModel cm = compile(m);

  SimResult result;
  result.samples.resize(static_cast<std::size_t>(cfg.samples));
  std::vector<double> values(cm.vars.size());
  for (std::int64_t i = 0; i < cfg.samples; ++i) {
    auto sample_index = static_cast<std::uint64_t>(i);
    for (std::size_t v = 0; v < cm.vars.size(); ++v) {
      const CompiledVar& var = cm.vars[v];
      switch (var.kind) {
        case VarKind::Normal:
          values[v] = var.p0 + var.p1 * rng::gaussian(cfg.seed, sample_index, v);
          break;
        case VarKind::LogNormal:
          values[v] =
              std::exp(var.p0 + var.p1 * rng::gaussian(cfg.seed, sample_index, v));
          break;
        case VarKind::Point:
          values[v] = var.p0;
          break;
      }
    }
    result.samples[static_cast<std::size_t>(i)] = eval(cm.root, values);
  }
  result.stats = summarize(result.samples);
  return result;
}

SampleStats summarize(std::span<const double> samples) {
  if (samples.empty()) throw DomainError("cannot summarize an empty sample");
  auto n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= n;

  double m2 = 0.0;
  double m3 = 0.0;
  for (double s : samples) {
    double d = s - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  SampleStats stats;
  stats.n = static_cast<std::int64_t>(samples.size());
  stats.mean = mean;
  // Identical samples must report exactly zero spread; the accumulation
  // above can leave rounding residue.
  auto [min_it, max_it] = std::minmax_element(samples.begin(), samples.end());
  if (!(*min_it < *max_it)) {
    stats.mean = *min_it;
    return stats;
  }
  stats.sd = samples.size() > 1 ? std::sqrt(m2 / (n - 1.0)) : 0.0;
  double v = m2 / n;
  stats.skewness = v > 0.0 ? (m3 / n) / std::pow(v, 1.5) : 0.0;
  return stats;
}

DensityCurve kde(std::span<const double> samples, const SimConfig& cfg) {
  if (samples.size() < 2) {
    throw DomainError("kernel density estimation requires >= 2 samples");
  }
  auto [min_it, max_it] = std::minmax_element(samples.begin(), samples.end());
  if (!(*min_it < *max_it)) {
    throw DomainError("degenerate sample: zero spread");
  }

  double h;
  if (cfg.bandwidth) {
    h = *cfg.bandwidth;
  } else {
    SampleStats stats = summarize(samples);
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    double spread = iqr > 0.0 ? std::min(stats.sd, iqr / 1.34) : stats.sd;
    h = 0.9 * spread *
        std::pow(static_cast<double>(samples.size()), -0.2);
  }

  DensityCurve curve;
  curve.bandwidth = h;
  if (cfg.grid) {
    curve.grid = make_grid(cfg.grid->min, cfg.grid->max, cfg.grid->points);
  } else {
    curve.grid = make_grid(*min_it - 3.0 * h, *max_it + 3.0 * h, 512);
  }

  curve.density.resize(curve.grid.size());
  double norm = 1.0 / (static_cast<double>(samples.size()) * h *
                       std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    double x = curve.grid[i];
    double acc = 0.0;
    for (double s : samples) {
      double z = (x - s) / h;
      acc += std::exp(-0.5 * z * z);
    }
    curve.density[i] = acc * norm;
  }
  return curve;
}

std::vector<LabeledCurve> overlay_curves(const RiskModel& m,
                                         const SimConfig& cfg,
                                         PropagationMode mode) {
  MomentPair propagated = propagate_moments(m);
  std::optional<LogNormalParams> log_params;
  if (mode == PropagationMode::LogNormal) {
    log_params = propagate_lognormal(m);
  }

  SimResult sim = simulate(m, cfg);
  DensityCurve sample_density = kde(sim.samples, cfg);
  std::vector<double> grid = sample_density.grid;
  double bw = sample_density.bandwidth;

  std::vector<LabeledCurve> curves;
  curves.push_back({"kde", std::move(sample_density)});

  auto closed_form = [&](auto&& pdf) {
    DensityCurve c;
    c.grid = grid;
    c.bandwidth = bw;
    c.density.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) c.density[i] = pdf(grid[i]);
    return c;
  };

  if (propagated.sd > 0.0) {
    curves.push_back({"propagated_normal", closed_form([&](double x) {
                        return normal_pdf(x, propagated.mean, propagated.sd);
                      })});
  }

  if (const VariableId* first = first_leaf(m.expression)) {
    MomentPair ref = m.variables.at(*first).moments();
    if (ref.mean != 0.0 && ref.sd > 0.0 && propagated.mean != 0.0) {
      double ref_sd = std::abs(propagated.mean) * (ref.sd / std::abs(ref.mean));
      curves.push_back({"reference_normal", closed_form([&](double x) {
                          return normal_pdf(x, propagated.mean, ref_sd);
                        })});
    }
  }

  if (log_params && log_params->sigma_log > 0.0) {
    curves.push_back({"propagated_lognormal", closed_form([&](double x) {
                        return lognormal_pdf(x, *log_params);
                      })});
  }
  return curves;
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

void write_samples_csv(std::ostream& os, std::span<const double> samples) {
  os << "value\n";
  for (double s : samples) os << format_double(s) << "\n";
}

void write_curves_csv(std::ostream& os, std::span<const LabeledCurve> curves) {
  os << "x,density,curve_id\n";
  for (const auto& labeled : curves) {
    const DensityCurve& c = labeled.curve;
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
      os << format_double(c.grid[i]) << "," << format_double(c.density[i])
         << "," << labeled.id << "\n";
    }
  }
}

}  // namespace riskprop
