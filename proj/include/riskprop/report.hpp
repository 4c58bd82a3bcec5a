#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "riskprop/montecarlo.hpp"
#include "riskprop/propagation.hpp"
#include "riskprop/riskmodel.hpp"
#include "riskprop/sil.hpp"

namespace riskprop {

nlohmann::json to_json(const MomentPair& m);
nlohmann::json to_json(const LogNormalParams& p);
nlohmann::json to_json(const SampleStats& s);
nlohmann::json to_json(const Verdict& v);
nlohmann::json to_json(const Diagnostic& d);
nlohmann::json to_json(const ComposeReport& r);

// Envelope for one CLI invocation; nlohmann objects keep keys sorted, so
// dumps are byte-stable for golden-file comparison.
nlohmann::json run_report(const std::string& command, nlohmann::json inputs,
                          nlohmann::json results,
                          const std::vector<Diagnostic>& warnings);

// Distribution the model's result is read as in exact mode: a single leaf
// keeps its declared distribution, a convertible pure product propagates
// exactly in log space, anything else is interpreted as a normal with the
// propagated moments.
DistributionSpec result_distribution(const RiskModel& m);

struct ReportOptions {
  std::uint64_t seed = 0;
  std::int64_t samples = 100000;
};

struct ReportBundle {
  nlohmann::json document;
  std::vector<LabeledCurve> overlay_normal;
  std::vector<LabeledCurve> overlay_lognormal;  // empty when not applicable
};

// Full analysis bundle: propagated moments (both modes where applicable),
// Monte Carlo stats, figure-style overlay curves, classification against
// the model's target when present, and — for three-factor products — a
// consistency check of the first factor's sd against the expected
// dispersion doubling, probing the adjacent decade readings.
ReportBundle build_report(const RiskModel& m, const ReportOptions& opts);

}  // namespace riskprop
