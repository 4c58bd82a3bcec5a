#include "riskprop/report.hpp"

#include <cmath>
#include <utility>

#include "riskprop/errors.hpp"

namespace riskprop {

using nlohmann::json;

json to_json(const MomentPair& m) {
  return json{{"mean", m.mean}, {"sd", m.sd}};
}

json to_json(const LogNormalParams& p) {
  return json{{"mu_log", p.mu_log}, {"sigma_log", p.sigma_log}};
}

json to_json(const SampleStats& s) {
  return json{
      {"n", s.n}, {"mean", s.mean}, {"sd", s.sd}, {"skewness", s.skewness}};
}

json to_json(const Verdict& v) {
  json j{{"met", v.met},
         {"margin", v.margin},
         {"band_exponent", v.band_exponent},
         {"q", v.q},
         {"confidence", v.confidence}};
  if (v.achieved_probability) {
    j["achieved_probability"] = *v.achieved_probability;
  }
  if (v.interval) {
    j["interval"] = json::array({v.interval->lo, v.interval->hi});
  }
  return j;
}

json to_json(const Diagnostic& d) {
  return json{{"severity", d.severity == Severity::Error ? "error" : "warning"},
              {"message", d.message},
              {"location", d.location}};
}

json to_json(const ComposeReport& r) {
  json steps = json::array();
  for (const auto& s : r.steps) {
    steps.push_back(json{{"label", s.label},
                         {"component", to_json(s.component)},
                         {"cumulative", to_json(s.cumulative)}});
  }
  json j{{"verdict", to_json(r.verdict)},
         {"combined", to_json(r.combined)},
         {"steps", std::move(steps)}};
  if (r.combined_lognormal) {
    j["combined_lognormal"] = to_json(*r.combined_lognormal);
  }
  return j;
}

json run_report(const std::string& command, json inputs, json results,
                const std::vector<Diagnostic>& warnings) {
  json w = json::array();
  for (const auto& d : warnings) {
    if (d.severity == Severity::Warning) w.push_back(to_json(d));
  }
  return json{{"command", command},
              {"inputs", std::move(inputs)},
              {"results", std::move(results)},
              {"warnings", std::move(w)}};
}

DistributionSpec result_distribution(const RiskModel& m) {
  if (const auto* leaf = std::get_if<LeafNode>(&m.expression.node)) {
    return m.variables.at(leaf->id);
  }
  if (is_pure_product(m.expression)) {
    try {
      return DistributionSpec{propagate_lognormal(m)};
    } catch (const DomainError&) {
      // not convertible; read the result as normal below
    }
  }
  return DistributionSpec{propagate_moments(m)};
}

namespace {

// Relative-dispersion increase of the propagated result over a first-factor
// reference: (sd_Z / mean_Z) / (ref_sd / ref_mean).
double dispersion_ratio(const MomentPair& result, double ref_mean,
                        double ref_sd) {
  return (result.sd / result.mean) / (ref_sd / ref_mean);
}

// For a flat three-factor product whose leading factor is normal, check
// whether the declared first-factor sd reproduces the expected ~2x
// dispersion increase, and probe the adjacent decade readings for the case
// of a misplaced decimal point in the source data.
std::optional<json> dispersion_increase_check(const RiskModel& m,
                                              const ReportOptions& opts) {
  const auto* prod = std::get_if<ProductNode>(&m.expression.node);
  if (!prod || prod->children.size() != 3) return std::nullopt;
  for (const auto& c : prod->children) {
    if (!std::holds_alternative<LeafNode>(c.node)) return std::nullopt;
  }
  const VariableId& first = std::get<LeafNode>(prod->children[0].node).id;
  const auto* first_normal =
      std::get_if<MomentPair>(&m.variables.at(first).dist);
  if (!first_normal || !(first_normal->mean > 0.0) ||
      !(first_normal->sd > 0.0)) {
    return std::nullopt;
  }

  constexpr double kWindowLo = 1.9;
  constexpr double kWindowHi = 2.1;

  json readings = json::array();
  bool declared_matches = false;
  bool other_matches = false;
  const std::pair<const char*, double> candidates[] = {
      {"declared", 1.0}, {"decade_up", 10.0}, {"decade_down", 0.1}};
  for (const auto& [label, factor] : candidates) {
    RiskModel probe = m;
    double sd = first_normal->sd * factor;
    probe.variables[first] =
        DistributionSpec::normal(first_normal->mean, sd);
    MomentPair analytic = propagate_moments(probe);
    double ratio = dispersion_ratio(analytic, first_normal->mean, sd);
    SimResult sim = simulate(probe, {opts.samples, opts.seed, {}, {}});
    double mc_ratio =
        dispersion_ratio({sim.stats.mean, sim.stats.sd}, first_normal->mean, sd);
    bool matches = ratio >= kWindowLo && ratio <= kWindowHi;
    if (std::string(label) == "declared") {
      declared_matches = matches;
    } else if (matches) {
      other_matches = true;
    }
    readings.push_back(json{{"label", label},
                            {"first_factor_sd", sd},
                            {"relative_increase_ratio", ratio},
                            {"mc_relative_increase_ratio", mc_ratio},
                            {"matches_doubling_window", matches}});
  }

  bool suspected_typo = !declared_matches && other_matches;
  json check{{"window", json::array({kWindowLo, kWindowHi})},
             {"readings", std::move(readings)},
             {"declared_consistent", declared_matches},
             {"suspected_typo", suspected_typo}};
  if (suspected_typo) {
    check["note"] =
        "declared first-factor sd does not reproduce the expected ~2x "
        "relative-sd increase, but an adjacent decade reading does; the "
        "source value may carry a misplaced decimal point";
  }
  return check;
}

json chain_to_json(const ChainSpec& chain) {
  return json{
      {"contributors", chain.contributors},
      {"operations", chain.operations},
      {"exact_inflation",
       op_chain_inflation(chain.operations, InflationMode::Exact)},
      {"rule_of_thumb_inflation",
       op_chain_inflation(chain.operations, InflationMode::RuleOfThumb)}};
}

}  // namespace

ReportBundle build_report(const RiskModel& m, const ReportOptions& opts) {
  require_valid(m);
  ReportBundle bundle;
  json& doc = bundle.document;

  MomentPair propagated = propagate_moments(m);
  doc["moments"] = to_json(propagated);
  doc["operation_chain"] = chain_to_json(chain_spec(m));

  std::optional<LogNormalParams> log_params;
  try {
    log_params = propagate_lognormal(m);
  } catch (const Error&) {
    // sums or non-convertible factors: no log-normal view
  }
  if (log_params) {
    json l = to_json(*log_params);
    l["moments"] = to_json(moments_from_lognormal(*log_params));
    doc["lognormal"] = std::move(l);
  }

  SimConfig cfg{opts.samples, opts.seed, {}, {}};
  SimResult sim = simulate(m, cfg);
  json mc = to_json(sim.stats);
  mc["seed"] = opts.seed;
  doc["monte_carlo"] = std::move(mc);

  try {
    if (log_params) {
      auto all = overlay_curves(m, cfg, PropagationMode::LogNormal);
      for (const auto& c : all) {
        if (c.id != "propagated_lognormal") bundle.overlay_normal.push_back(c);
      }
      bundle.overlay_lognormal = std::move(all);
    } else {
      bundle.overlay_normal = overlay_curves(m, cfg, PropagationMode::Normal);
    }
  } catch (const DomainError&) {
    // degenerate sample (e.g. all point masses): no curves
  }

  if (m.target) {
    doc["classification"] =
        json{{"coverage", to_json(classify_interval(propagated, *m.target))},
             {"exact", to_json(band_probability(result_distribution(m),
                                                *m.target))}};
  }

  if (auto check = dispersion_increase_check(m, opts)) {
    doc["dispersion_increase_check"] = std::move(*check);
  }

  json w = json::array();
  for (const auto& d : validate_model(m)) w.push_back(to_json(d));
  doc["diagnostics"] = std::move(w);
  return bundle;
}

}  // namespace riskprop
