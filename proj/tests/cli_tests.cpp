// End-to-end checks of the command-line tool: spawns the built binary on
// the bundled example models and inspects JSON output, CSV artifacts and
// exit codes. Invoked as: cli_tests <cli-path> <models-dir> <scratch-dir>.

#define DOCTEST_CONFIG_IMPLEMENT
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

namespace {

using nlohmann::json;

std::string g_cli;
std::string g_models;
std::string g_scratch;
int g_run_counter = 0;

struct CliRun {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliRun run_cli(const std::string& args) {
  std::string out_path =
      g_scratch + "/out_" + std::to_string(g_run_counter) + ".txt";
  std::string err_path =
      g_scratch + "/err_" + std::to_string(g_run_counter) + ".txt";
  ++g_run_counter;
  std::string cmd =
      "'" + g_cli + "' " + args + " > '" + out_path + "' 2> '" + err_path + "'";
  int status = std::system(cmd.c_str());
  CliRun run;
  run.exit_code = WEXITSTATUS(status);
  run.out = slurp(out_path);
  run.err = slurp(err_path);
  return run;
}

std::string model(const std::string& name) {
  return "'" + g_models + "/" + name + "'";
}

json results_of(const CliRun& run) {
  REQUIRE(run.exit_code == 0);
  json doc = json::parse(run.out);
  return doc.at("results");
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("propagate emits the analytic moments") {
  CliRun run = run_cli("propagate " + model("example_xy.json"));
  json r = results_of(run);
  CHECK(std::abs(r.at("mean").get<double>() - 0.55e-3) < 1e-12);
  CHECK(std::abs(r.at("sd").get<double>() - 0.2275e-3) < 5e-8);
}

TEST_CASE("propagate in log-normal mode emits log parameters") {
  CliRun run =
      run_cli("propagate " + model("example_xy.json") + " --mode lognormal");
  json r = results_of(run);
  double mu_expected = -0.6768 + std::log(1e-3);
  CHECK(std::abs(r.at("mu_log").get<double>() - mu_expected) < 5e-4);
  CHECK(std::abs(r.at("sigma_log").get<double>() - 0.3974) < 5e-4);
  CHECK(std::abs(r.at("mean").get<double>() - 0.55e-3) < 1e-7);
}

TEST_CASE("classify reports the tangent verdict") {
  CliRun run = run_cli("classify " + model("example_h.json") +
                       " --band-exponent 8 --q 3");
  json r = results_of(run);
  CHECK(r.at("met").get<bool>());
  CHECK(std::abs(r.at("margin").get<double>()) < 1e-12);
  CHECK(r.at("band_exponent").get<int>() == 8);
  CHECK(r.at("q").get<double>() == 3.0);

  SUBCASE("exact mode reports the achieved probability") {
    CliRun exact = run_cli("classify " + model("example_h.json") +
                           " --band-exponent 8 --confidence 0.9973 --exact");
    json er = results_of(exact);
    CHECK(std::abs(er.at("achieved_probability").get<double>() - 0.9973) < 1e-4);
    CHECK(er.at("met").get<bool>());
  }

  SUBCASE("the model target supplies defaults") {
    CliRun fallback = run_cli("classify " + model("example_h.json"));
    json fr = results_of(fallback);
    CHECK(fr.at("band_exponent").get<int>() == 8);
    CHECK(fr.at("met").get<bool>());
  }
}

TEST_CASE("budget solves the equal-sd quadratic") {
  CliRun run =
      run_cli("budget --target-sd 0.15 --mu-x 0.55 --mu-y 0.55");
  json r = results_of(run);
  CHECK(std::abs(r.at("sigma").get<double>() - 0.18748) < 5e-5);
}

TEST_CASE("compose adjudicates both bundled composition claims") {
  CliRun product = run_cli("compose " + model("example_compose_product.json"));
  json pr = results_of(product);
  CHECK_FALSE(pr.at("verdict").at("met").get<bool>());
  CHECK(pr.at("steps").size() == 2);

  CliRun sum = run_cli("compose " + model("example_compose_sum.json"));
  json sr = results_of(sum);
  CHECK_FALSE(sr.at("verdict").at("met").get<bool>());

  CliRun exact = run_cli("compose " + model("example_compose_product.json") +
                         " --exact");
  json er = results_of(exact);
  CHECK_FALSE(er.at("verdict").at("met").get<bool>());
  CHECK(er.contains("combined_lognormal"));

  SUBCASE("nested expressions are not flat compositions") {
    std::string nested = g_scratch + "/nested.json";
    std::ofstream(nested) << R"({
      "variables": {
        "A": {"dist": "normal", "mean": 1.0, "sd": 0.1},
        "B": {"dist": "normal", "mean": 1.0, "sd": 0.1},
        "C": {"dist": "normal", "mean": 1.0, "sd": 0.1}
      },
      "expression": {"sum": [{"product": ["A", "B"]}, "C"]},
      "target": {"band_exponent": 0, "confidence": 0.9}
    })";
    CHECK(run_cli("compose '" + nested + "'").exit_code == 2);
  }
}

TEST_CASE("exact classification of a pure product uses the log-scale view") {
  CliRun run = run_cli("classify " + model("example_xy.json") +
                       " --band-exponent 3 --confidence 0.9973 --exact");
  json r = results_of(run);
  REQUIRE(r.contains("achieved_probability"));
  double p = r.at("achieved_probability").get<double>();
  CHECK(p > 0.95);
  CHECK(p < 0.96);
  CHECK_FALSE(r.at("met").get<bool>());
}

TEST_CASE("calibrate reports inflation and admitted operations") {
  CliRun run = run_cli(
      "calibrate --input-factor 3.1622776601683795 --output-factor 10");
  json r = results_of(run);
  CHECK(r.at("allowed_inflation").get<double>() == doctest::Approx(2.0));
  CHECK(r.at("max_operations").get<int>() == 3);
}

TEST_CASE("simulate is deterministic and writes CSV artifacts") {
  std::string args = "simulate " + model("example_xy.json") +
                     " --samples 5000 --seed 11";
  CliRun a = run_cli(args);
  CliRun b = run_cli(args);
  CHECK(a.out == b.out);
  json r = results_of(a);
  CHECK(r.at("stats").at("n").get<int>() == 5000);
  CHECK(std::abs(r.at("stats").at("mean").get<double>() - 0.55e-3) < 2e-5);
  CHECK(r.at("stats").at("skewness").get<double>() > 0.0);

  SUBCASE("sample CSV") {
    std::string csv = g_scratch + "/samples.csv";
    CliRun run = run_cli(args + " --csv '" + csv + "'");
    REQUIRE(run.exit_code == 0);
    std::string text = slurp(csv);
    CHECK(text.substr(0, 6) == "value\n");
    CHECK(std::count(text.begin(), text.end(), '\n') == 5001);
  }

  SUBCASE("KDE CSV integrates to about one") {
    std::string csv = g_scratch + "/kde.csv";
    CliRun run = run_cli(args + " --kde --csv '" + csv + "'");
    REQUIRE(run.exit_code == 0);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "x,density,curve_id");
    double mass = 0.0;
    double prev_x = 0.0, prev_d = 0.0;
    bool first = true;
    std::string line;
    while (std::getline(in, line)) {
      auto c1 = line.find(',');
      auto c2 = line.find(',', c1 + 1);
      double x = std::stod(line.substr(0, c1));
      double d = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
      if (!first) mass += 0.5 * (d + prev_d) * (x - prev_x);
      first = false;
      prev_x = x;
      prev_d = d;
    }
    CHECK(mass > 0.97);
    CHECK(mass < 1.03);
  }
}

TEST_CASE("report writes the full bundle and flags the sd inconsistency") {
  std::string out_dir = g_scratch + "/report_literal";
  auto start = std::chrono::steady_clock::now();
  CliRun run = run_cli("report " + model("example_hbs_literal.json") +
                       " --out-dir '" + out_dir + "' --seed 7");
  double elapsed = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  REQUIRE(run.exit_code == 0);
  CHECK(elapsed < 10.0);  // 10^5 samples by default

  json doc = json::parse(slurp(out_dir + "/report.json"));
  CHECK(doc.contains("moments"));
  CHECK(doc.contains("lognormal"));
  CHECK(doc.contains("monte_carlo"));

  json check = doc.at("dispersion_increase_check");
  CHECK_FALSE(check.at("declared_consistent").get<bool>());
  CHECK(check.at("suspected_typo").get<bool>());

  CHECK(std::filesystem::exists(out_dir + "/overlay_normal.csv"));
  CHECK(std::filesystem::exists(out_dir + "/overlay_lognormal.csv"));

  SUBCASE("the wide-sd reading is consistent, no flag") {
    std::string out2 = g_scratch + "/report_wide";
    CliRun wide = run_cli("report " + model("example_hbs.json") +
                          " --out-dir '" + out2 + "' --seed 7 --samples 20000");
    REQUIRE(wide.exit_code == 0);
    json d2 = json::parse(slurp(out2 + "/report.json"));
    json c2 = d2.at("dispersion_increase_check");
    CHECK(c2.at("declared_consistent").get<bool>());
    CHECK_FALSE(c2.at("suspected_typo").get<bool>());
  }
}

TEST_CASE("exit codes distinguish failure classes") {
  CHECK(run_cli("propagate '" + g_scratch + "/missing.json'").exit_code == 3);

  std::string bad = g_scratch + "/bad.json";
  std::ofstream(bad) << "{ nope";
  CHECK(run_cli("propagate '" + bad + "'").exit_code == 2);

  std::string invalid = g_scratch + "/invalid.json";
  std::ofstream(invalid) << R"({
    "variables": {"X": {"dist": "normal", "mean": 1.0, "sd": -1.0}},
    "expression": "X"
  })";
  CHECK(run_cli("propagate '" + invalid + "'").exit_code == 2);

  CliRun unsupported = run_cli("propagate " + model("example_compose_sum.json") +
                               " --mode lognormal");
  CHECK(unsupported.exit_code == 4);

  CHECK(run_cli("classify " + model("example_xy.json")).exit_code == 2);
  CHECK(run_cli("budget --target-sd -1 --mu-x 1 --mu-y 1").exit_code == 2);
  CHECK(run_cli("calibrate --input-factor 1 --output-factor 10").exit_code == 2);
  CHECK(run_cli("definitely-not-a-command").exit_code == 2);
  CHECK(run_cli("simulate " + model("example_xy.json") +
                " --samples 1 --seed 0")
            .exit_code == 2);
  CHECK(run_cli("--help").exit_code == 0);
}

TEST_SUITE_END();

int main(int argc, char** argv) {
  if (argc < 4) {
    std::fprintf(stderr,
                 "usage: cli_tests <cli-path> <models-dir> <scratch-dir>\n");
    return 1;
  }
  g_cli = argv[argc - 3];
  g_models = argv[argc - 2];
  g_scratch = argv[argc - 1];
  std::filesystem::create_directories(g_scratch);

  doctest::Context context(argc - 3, argv);
  return context.run();
}
