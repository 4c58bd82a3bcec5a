// riskprop command line: propagate uncertainty through sum-of-product risk
// models, classify results into decade bands, solve inverse budgets, and
// adjudicate composition claims. JSON results go to stdout, diagnostics to
// stderr. Exit codes: 0 ok, 2 parse/validation, 3 I/O, 4 unsupported
// operation.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "riskprop/errors.hpp"
#include "riskprop/montecarlo.hpp"
#include "riskprop/propagation.hpp"
#include "riskprop/report.hpp"
#include "riskprop/riskmodel.hpp"
#include "riskprop/sil.hpp"

namespace {

using nlohmann::json;
using namespace riskprop;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitUnsupported = 4;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path + "'");
  return ss.str();
}

struct LoadedModel {
  RiskModel model;
  std::vector<Diagnostic> diagnostics;
};

LoadedModel load_model(const std::string& path) {
  LoadedModel loaded;
  loaded.model = parse_model(read_file(path));
  loaded.diagnostics = validate_model(loaded.model);
  bool failed = false;
  for (const auto& d : loaded.diagnostics) {
    if (d.severity == Severity::Error) {
      std::cerr << "error: " << d.message << " (" << d.location << ")\n";
      failed = true;
    }
  }
  if (failed) throw ValidationError("model validation failed: " + path);
  return loaded;
}

void emit(const json& report) { std::cout << report.dump(2) << "\n"; }

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("error writing '" + path + "'");
}

// Band/confidence/q resolution: explicit flags win, the model's optional
// target fills the gaps, and a missing confidence is completed from q (the
// two-sided coverage it implies) or vice versa.
SilTarget resolve_target(const RiskModel& m, std::optional<int> band_flag,
                         std::optional<double> q_flag,
                         std::optional<double> confidence_flag) {
  std::optional<int> band = band_flag;
  std::optional<double> q = q_flag;
  std::optional<double> confidence = confidence_flag;
  if (m.target) {
    if (!band) band = m.target->band.exponent;
    if (!q && !confidence) {
      confidence = m.target->confidence;
      q = m.target->q;
    }
  }
  if (!band) {
    throw ValidationError(
        "no band exponent: pass --band-exponent or give the model a target");
  }
  if (!q && !confidence) {
    throw ValidationError(
        "no coverage requirement: pass --q or --confidence, or give the "
        "model a target");
  }
  if (q && !(*q > 0.0)) throw DomainError("q must be positive");
  if (confidence && !(*confidence > 0.0 && *confidence < 1.0)) {
    throw DomainError("confidence must lie in (0, 1)");
  }
  if (!confidence) confidence = 2.0 * gaussian_cdf(*q) - 1.0;
  return SilTarget{SilBand{*band}, *confidence, q};
}

struct CliOptions {
  std::string model_path;
  std::string mode = "normal";
  std::int64_t samples = 10000;
  std::uint64_t seed = 0;
  bool kde = false;
  bool exact = false;
  std::optional<double> grid_min;
  std::optional<double> grid_max;
  int points = 512;
  std::optional<double> bandwidth;
  std::string csv_path;
  std::optional<int> band_exponent;
  std::optional<double> q;
  std::optional<double> confidence;
  double target_sd = 0.0;
  double mu_x = 0.0;
  double mu_y = 0.0;
  double input_factor = 0.0;
  double output_factor = 0.0;
  std::string out_dir;
};

SimConfig make_sim_config(const CliOptions& opt) {
  SimConfig cfg{opt.samples, opt.seed, {}, opt.bandwidth};
  if (opt.grid_min || opt.grid_max) {
    if (!opt.grid_min || !opt.grid_max) {
      throw DomainError("--grid-min and --grid-max must be given together");
    }
    cfg.grid = GridSpec{*opt.grid_min, *opt.grid_max, opt.points};
  }
  return cfg;
}

void cmd_propagate(const CliOptions& opt) {
  LoadedModel loaded = load_model(opt.model_path);
  json results;
  if (opt.mode == "lognormal") {
    LogNormalParams p = propagate_lognormal(loaded.model);
    MomentPair m = moments_from_lognormal(p);
    results = {{"mu_log", p.mu_log},
               {"sigma_log", p.sigma_log},
               {"mean", m.mean},
               {"sd", m.sd}};
  } else {
    MomentPair m = propagate_moments(loaded.model);
    results = {{"mean", m.mean}, {"sd", m.sd}};
  }
  emit(run_report("propagate",
                  {{"model", opt.model_path}, {"mode", opt.mode}},
                  std::move(results), loaded.diagnostics));
}

void cmd_simulate(const CliOptions& opt) {
  LoadedModel loaded = load_model(opt.model_path);
  SimConfig cfg = make_sim_config(opt);
  SimResult sim = simulate(loaded.model, cfg);
  json results{{"stats", to_json(sim.stats)}};
  if (opt.kde) {
    DensityCurve curve = kde(sim.samples, cfg);
    results["kde"] = {{"bandwidth", curve.bandwidth},
                      {"points", curve.grid.size()},
                      {"grid_min", curve.grid.front()},
                      {"grid_max", curve.grid.back()}};
    if (!opt.csv_path.empty()) {
      std::ostringstream csv;
      LabeledCurve labeled{"kde", std::move(curve)};
      write_curves_csv(csv, {&labeled, 1});
      write_text_file(opt.csv_path, csv.str());
      results["csv"] = opt.csv_path;
    }
  } else if (!opt.csv_path.empty()) {
    std::ostringstream csv;
    write_samples_csv(csv, sim.samples);
    write_text_file(opt.csv_path, csv.str());
    results["csv"] = opt.csv_path;
  }
  emit(run_report("simulate",
                  {{"model", opt.model_path},
                   {"samples", opt.samples},
                   {"seed", opt.seed},
                   {"kde", opt.kde}},
                  std::move(results), loaded.diagnostics));
}

void cmd_classify(const CliOptions& opt) {
  LoadedModel loaded = load_model(opt.model_path);
  SilTarget target =
      resolve_target(loaded.model, opt.band_exponent, opt.q, opt.confidence);
  Verdict verdict =
      opt.exact
          ? band_probability(result_distribution(loaded.model), target)
          : classify_interval(propagate_moments(loaded.model), target);
  emit(run_report("classify",
                  {{"model", opt.model_path},
                   {"band_exponent", target.band.exponent},
                   {"confidence", target.confidence},
                   {"q", target.coverage()},
                   {"exact", opt.exact}},
                  to_json(verdict), loaded.diagnostics));
}

void cmd_budget(const CliOptions& opt) {
  double sigma = budget_product_inputs(opt.target_sd, opt.mu_x, opt.mu_y);
  emit(run_report("budget",
                  {{"target_sd", opt.target_sd},
                   {"mu_x", opt.mu_x},
                   {"mu_y", opt.mu_y}},
                  {{"sigma", sigma}}, {}));
}

void cmd_compose(const CliOptions& opt) {
  LoadedModel loaded = load_model(opt.model_path);
  const RiskModel& m = loaded.model;

  const auto* sum = std::get_if<SumNode>(&m.expression.node);
  const auto* prod = std::get_if<ProductNode>(&m.expression.node);
  if (!sum && !prod) {
    throw ValidationError(
        "compose expects a root sum or product of component variables");
  }
  const auto& children = sum ? sum->children : prod->children;
  std::vector<std::pair<std::string, DistributionSpec>> components;
  components.reserve(children.size());
  for (const auto& c : children) {
    const auto* leaf = std::get_if<LeafNode>(&c.node);
    if (!leaf) {
      throw ValidationError(
          "compose expects a flat composition: every root child must be a "
          "variable");
    }
    components.emplace_back(leaf->id.name, m.variables.at(leaf->id));
  }

  SilTarget target =
      resolve_target(m, opt.band_exponent, opt.q, opt.confidence);
  ComposeReport report = compose_check(
      components, sum ? Combinator::Sum : Combinator::Product, target,
      opt.exact ? ComposeMode::Exact : ComposeMode::Coverage);
  emit(run_report("compose",
                  {{"model", opt.model_path},
                   {"combinator", sum ? "sum" : "product"},
                   {"band_exponent", target.band.exponent},
                   {"confidence", target.confidence},
                   {"exact", opt.exact}},
                  to_json(report), loaded.diagnostics));
}

void cmd_calibrate(const CliOptions& opt) {
  CalibrationResult r =
      calibration_max_ops({opt.input_factor, opt.output_factor});
  emit(run_report("calibrate",
                  {{"input_factor", opt.input_factor},
                   {"output_factor", opt.output_factor}},
                  {{"allowed_inflation", r.allowed_inflation},
                   {"max_operations", r.max_operations}},
                  {}));
}

void cmd_report(const CliOptions& opt) {
  LoadedModel loaded = load_model(opt.model_path);
  ReportBundle bundle =
      build_report(loaded.model, ReportOptions{opt.seed, opt.samples});

  std::error_code ec;
  std::filesystem::create_directories(opt.out_dir, ec);
  if (ec) {
    throw IoError("cannot create '" + opt.out_dir + "': " + ec.message());
  }

  json files = json::array();
  auto write_overlay = [&](const std::vector<LabeledCurve>& curves,
                           const std::string& name) {
    if (curves.empty()) return;
    std::ostringstream csv;
    write_curves_csv(csv, curves);
    std::string path = opt.out_dir + "/" + name;
    write_text_file(path, csv.str());
    files.push_back(path);
  };
  write_overlay(bundle.overlay_normal, "overlay_normal.csv");
  write_overlay(bundle.overlay_lognormal, "overlay_lognormal.csv");

  std::string report_path = opt.out_dir + "/report.json";
  write_text_file(report_path, bundle.document.dump(2) + "\n");
  files.push_back(report_path);

  json results = bundle.document;
  results["files"] = std::move(files);
  emit(run_report("report",
                  {{"model", opt.model_path},
                   {"out_dir", opt.out_dir},
                   {"seed", opt.seed},
                   {"samples", opt.samples}},
                  std::move(results), loaded.diagnostics));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "uncertainty propagation and integrity-band classification for "
      "sum-of-product risk models"};
  app.require_subcommand(1);
  CliOptions opt;

  auto add_target_flags = [&](CLI::App* sub) {
    sub->add_option("--band-exponent", opt.band_exponent,
                    "band exponent x for [10^-(x+1), 10^-x]");
    sub->add_option("--q", opt.q, "coverage factor (number of sigmas)");
    sub->add_option("--confidence", opt.confidence,
                    "required confidence in (0, 1)");
    sub->add_flag("--exact", opt.exact,
                  "probability-mass test instead of the coverage interval");
  };

  auto* propagate =
      app.add_subcommand("propagate", "propagate moments through a model");
  propagate->add_option("model", opt.model_path, "model file")->required();
  propagate->add_option("--mode", opt.mode, "normal|lognormal")
      ->check(CLI::IsMember({"normal", "lognormal"}));

  auto* simulate_cmd =
      app.add_subcommand("simulate", "Monte Carlo sampling with statistics");
  simulate_cmd->add_option("model", opt.model_path, "model file")->required();
  simulate_cmd->add_option("--samples", opt.samples, "sample count")
      ->required();
  simulate_cmd->add_option("--seed", opt.seed, "RNG seed")->required();
  simulate_cmd->add_flag("--kde", opt.kde, "kernel density estimate");
  simulate_cmd->add_option("--grid-min", opt.grid_min, "density grid start");
  simulate_cmd->add_option("--grid-max", opt.grid_max, "density grid end");
  simulate_cmd->add_option("--points", opt.points, "density grid points");
  simulate_cmd->add_option("--bandwidth", opt.bandwidth,
                           "KDE bandwidth override");
  simulate_cmd->add_option("--csv", opt.csv_path,
                           "write samples (or the KDE curve with --kde) here");

  auto* classify =
      app.add_subcommand("classify", "test a model against a decade band");
  classify->add_option("model", opt.model_path, "model file")->required();
  add_target_flags(classify);

  auto* budget = app.add_subcommand(
      "budget", "equal-sd input budget for a two-factor product");
  budget->add_option("--target-sd", opt.target_sd, "combined sd target")
      ->required();
  budget->add_option("--mu-x", opt.mu_x, "first factor mean")->required();
  budget->add_option("--mu-y", opt.mu_y, "second factor mean")->required();

  auto* compose = app.add_subcommand(
      "compose", "adjudicate a component composition against a band");
  compose->add_option("model", opt.model_path, "model file")->required();
  add_target_flags(compose);

  auto* calibrate = app.add_subcommand(
      "calibrate", "admitted sd inflation for a class-width scheme");
  calibrate->add_option("--input-factor", opt.input_factor,
                        "input class-width factor (> 1)")
      ->required();
  calibrate->add_option("--output-factor", opt.output_factor,
                        "output class-width factor (> 1)")
      ->required();

  auto* report =
      app.add_subcommand("report", "full analysis bundle with figure CSVs");
  report->add_option("model", opt.model_path, "model file")->required();
  report->add_option("--out-dir", opt.out_dir, "output directory")->required();
  report->add_option("--seed", opt.seed, "RNG seed")->required();
  report->add_option("--samples", opt.samples, "sample count")
      ->default_val(100000);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (propagate->parsed()) {
      cmd_propagate(opt);
    } else if (simulate_cmd->parsed()) {
      cmd_simulate(opt);
    } else if (classify->parsed()) {
      cmd_classify(opt);
    } else if (budget->parsed()) {
      cmd_budget(opt);
    } else if (compose->parsed()) {
      cmd_compose(opt);
    } else if (calibrate->parsed()) {
      cmd_calibrate(opt);
    } else if (report->parsed()) {
      cmd_report(opt);
    }
  } catch (const UnsupportedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUnsupported;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
