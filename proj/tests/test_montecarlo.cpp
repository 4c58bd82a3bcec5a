#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "riskprop/errors.hpp"
#include "riskprop/montecarlo.hpp"
#include "test_support.hpp"

using namespace riskprop;
using test_support::rel_err;
using test_support::TestRng;

namespace {

RiskModel xy_model() {
  RiskModel m;
  m.variables.emplace(VariableId{"X"}, DistributionSpec::normal(0.55, 0.15));
  m.variables.emplace(VariableId{"Y"}, DistributionSpec::normal(1.0, 0.3));
  m.expression = RiskExpr::product(
      {RiskExpr::leaf(VariableId{"X"}), RiskExpr::leaf(VariableId{"Y"})});
  return m;
}

double trapezoid(const DensityCurve& c) {
  double acc = 0.0;
  for (std::size_t i = 1; i < c.grid.size(); ++i) {
    acc += 0.5 * (c.density[i] + c.density[i - 1]) * (c.grid[i] - c.grid[i - 1]);
  }
  return acc;
}

}  // namespace

TEST_SUITE_BEGIN("montecarlo");

TEST_CASE("two-factor product sampling tracks the analytic moments") {
  RiskModel m = xy_model();
  for (std::uint64_t seed : {11u, 22u, 33u}) {
    SimResult sim = simulate(m, SimConfig{100000, seed, {}, {}});
    double se = sim.stats.sd / std::sqrt(1e5);
    CHECK(std::abs(sim.stats.mean - 0.55) < 3.0 * se);
    CHECK(rel_err(sim.stats.sd, 0.2275) < 0.03);
    CHECK(sim.stats.skewness > 0.0);
  }
}

TEST_CASE("point-mass models sample their deterministic value") {
  RiskModel m;
  m.variables.emplace(VariableId{"A"}, DistributionSpec::point(0.2));
  m.variables.emplace(VariableId{"B"}, DistributionSpec::point(0.4));
  m.expression = RiskExpr::sum(
      {RiskExpr::leaf(VariableId{"A"}), RiskExpr::leaf(VariableId{"B"})});
  SimResult sim = simulate(m, SimConfig{100, 5, {}, {}});
  for (double s : sim.samples) {
    CHECK(s == doctest::Approx(0.6).epsilon(1e-15));
  }
  CHECK(sim.stats.sd == 0.0);
  CHECK(sim.stats.skewness == 0.0);
}

TEST_CASE("runs are bit-identical for a fixed seed and differ across seeds") {
  RiskModel m = xy_model();
  SimResult a = simulate(m, SimConfig{5000, 77, {}, {}});
  SimResult b = simulate(m, SimConfig{5000, 77, {}, {}});
  REQUIRE(a.samples.size() == b.samples.size());
  CHECK(std::memcmp(a.samples.data(), b.samples.data(),
                    a.samples.size() * sizeof(double)) == 0);
  CHECK(a.stats.mean == b.stats.mean);
  CHECK(a.stats.sd == b.stats.sd);

  SimResult c = simulate(m, SimConfig{5000, 78, {}, {}});
  CHECK(a.stats.mean != c.stats.mean);
}

TEST_CASE("the draw stream is a pure function of (seed, index, slot)") {
  // Pins the portable stream contract: variables draw in sorted-name order,
  // two unit draws per variable, Box-Muller per draw pair. A prefix of a
  // longer run equals the shorter run, and every sample can be recomputed
  // in isolation.
  RiskModel m = xy_model();
  SimResult short_run = simulate(m, SimConfig{100, 42, {}, {}});
  SimResult long_run = simulate(m, SimConfig{1000, 42, {}, {}});
  for (std::size_t i = 0; i < short_run.samples.size(); ++i) {
    CHECK(short_run.samples[i] == long_run.samples[i]);
  }
  for (std::size_t i : {0u, 17u, 99u}) {
    double x = 0.55 + 0.15 * rng::gaussian(42, i, 0);  // X sorts before Y
    double y = 1.0 + 0.3 * rng::gaussian(42, i, 1);
    CHECK(short_run.samples[i] == x * y);
  }
}

TEST_CASE("random models agree with the analytic oracle (majority of seeds)") {
  TestRng gen(909);
  for (int trial = 0; trial < 5; ++trial) {
    RiskModel m = test_support::random_positive_model(gen, 6, 3, false);
    MomentPair expected = propagate_moments(m);
    int passes = 0;
    for (std::uint64_t seed : {101u, 202u, 303u}) {
      SimResult sim = simulate(m, SimConfig{100000, seed, {}, {}});
      double se = sim.stats.sd / std::sqrt(1e5);
      bool mean_ok = std::abs(sim.stats.mean - expected.mean) <=
                     std::max(4.0 * se, 1e-12);
      bool sd_ok = expected.sd == 0.0 ? sim.stats.sd < 1e-12
                                      : rel_err(sim.stats.sd, expected.sd) <= 0.05;
      if (mean_ok && sd_ok) ++passes;
    }
    CHECK(passes >= 2);
  }
}

TEST_CASE("config validation") {
  RiskModel m = xy_model();
  CHECK_THROWS_AS(simulate(m, SimConfig{1, 0, {}, {}}), DomainError);
  CHECK_THROWS_AS(simulate(m, SimConfig{100, 0, GridSpec{1.0, 0.0, 64}, {}}),
                  DomainError);
  CHECK_THROWS_AS(simulate(m, SimConfig{100, 0, GridSpec{0.0, 1.0, 1}, {}}),
                  DomainError);
  CHECK_THROWS_AS(simulate(m, SimConfig{100, 0, {}, -0.5}), DomainError);
}

TEST_CASE("kde of two points with a fixed bandwidth is symmetric") {
  std::vector<double> samples{0.0, 1.0};
  SimConfig cfg{2, 0, {}, 0.5};
  DensityCurve c = kde(samples, cfg);
  CHECK(c.bandwidth == 0.5);
  REQUIRE(c.grid.size() == 512);
  // default grid [-1.5, 2.5] is symmetric about 0.5
  std::size_t n = c.grid.size();
  for (std::size_t i = 0; i < n / 2; i += 7) {
    CHECK(c.density[i] ==
          doctest::Approx(c.density[n - 1 - i]).epsilon(1e-12));
  }
  double mid_lo = 0.25, mid_hi = 0.75;
  auto density_at = [&](double x) {
    double z0 = (x - 0.0) / 0.5;
    double z1 = (x - 1.0) / 0.5;
    return (std::exp(-0.5 * z0 * z0) + std::exp(-0.5 * z1 * z1)) /
           (2.0 * 0.5 * std::sqrt(2.0 * std::numbers::pi));
  };
  CHECK(density_at(mid_lo) == doctest::Approx(density_at(mid_hi)).epsilon(1e-12));
}

TEST_CASE("kde refuses degenerate samples") {
  std::vector<double> one{1.0};
  CHECK_THROWS_AS(kde(one, SimConfig{}), DomainError);
  std::vector<double> flat{2.0, 2.0, 2.0};
  CHECK_THROWS_AS(kde(flat, SimConfig{}), DomainError);
}

TEST_CASE("silverman bandwidth matches a manual computation") {
  std::vector<double> samples{1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0};
  DensityCurve c = kde(samples, SimConfig{});
  SampleStats stats = summarize(samples);
  double iqr = 6.25 - 2.75;  // type-7 quartiles of 1..8
  double expected = 0.9 * std::min(stats.sd, iqr / 1.34) * std::pow(8.0, -0.2);
  CHECK(c.bandwidth == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("kde integrates to one on a wide grid") {
  TestRng gen(1010);
  for (int trial = 0; trial < 5; ++trial) {
    RiskModel m = test_support::random_positive_model(gen, 4, 2, false);
    SimResult sim =
        simulate(m, SimConfig{20000, 555 + static_cast<std::uint64_t>(trial), {}, {}});
    if (sim.stats.sd == 0.0) continue;
    SimConfig cfg{20000, 0,
                  GridSpec{sim.stats.mean - 6.0 * sim.stats.sd,
                           sim.stats.mean + 6.0 * sim.stats.sd, 1024},
                  {}};
    DensityCurve c = kde(sim.samples, cfg);
    double mass = trapezoid(c);
    CHECK(mass > 0.99);
    CHECK(mass < 1.01);
  }
}

TEST_CASE("sample skewness of the product stays positive across seeds") {
  RiskModel m = xy_model();
  for (std::uint64_t seed : {101u, 202u, 303u}) {
    SimResult sim = simulate(m, SimConfig{100000, seed, {}, {}});
    CHECK(sim.stats.skewness > 0.0);
  }
}

TEST_CASE("overlay curves share a grid and reproduce the figure structure") {
  RiskModel m = xy_model();
  SimConfig cfg{20000, 4242, {}, {}};
  auto curves = overlay_curves(m, cfg, PropagationMode::Normal);
  REQUIRE(curves.size() == 3);
  CHECK(curves[0].id == "kde");
  CHECK(curves[1].id == "propagated_normal");
  CHECK(curves[2].id == "reference_normal");
  for (const auto& c : curves) {
    CHECK(c.curve.grid == curves[0].curve.grid);
  }

  // the reference curve has the first factor's relative sd: narrower, so
  // its peak is higher than the propagated normal's
  auto peak = [](const DensityCurve& c) {
    return *std::max_element(c.density.begin(), c.density.end());
  };
  CHECK(peak(curves[2].curve) > peak(curves[1].curve));

  // KDE roughly matches the propagated-normal curve (same scale)
  double l1 = 0.0;
  for (std::size_t i = 1; i < curves[0].curve.grid.size(); ++i) {
    double dx = curves[0].curve.grid[i] - curves[0].curve.grid[i - 1];
    l1 += std::abs(curves[0].curve.density[i] - curves[1].curve.density[i]) * dx;
  }
  CHECK(l1 < 0.35);

  SUBCASE("log-normal mode appends the log-normal density") {
    auto with_log = overlay_curves(m, cfg, PropagationMode::LogNormal);
    REQUIRE(with_log.size() == 4);
    CHECK(with_log[3].id == "propagated_lognormal");
    CHECK(trapezoid(with_log[3].curve) > 0.95);
    // close to the kde but not identical
    bool identical = true;
    for (std::size_t i = 0; i < with_log[0].curve.density.size(); ++i) {
      if (with_log[0].curve.density[i] != with_log[3].curve.density[i]) {
        identical = false;
        break;
      }
    }
    CHECK_FALSE(identical);
  }

  SUBCASE("point-mass models cannot produce density curves") {
    RiskModel flat;
    flat.variables.emplace(VariableId{"P"}, DistributionSpec::point(1.0));
    flat.expression = RiskExpr::leaf(VariableId{"P"});
    CHECK_THROWS_AS(overlay_curves(flat, cfg, PropagationMode::Normal),
                    DomainError);
  }
}

TEST_CASE("csv formats are stable and locale-free") {
  std::vector<double> samples{0.5, 1.25e-9, -3.0};
  std::ostringstream s;
  write_samples_csv(s, samples);
  CHECK(s.str() == "value\n0.5\n1.25e-09\n-3\n");

  LabeledCurve curve{"kde", DensityCurve{{0.0, 0.5}, {1.0, 1.25}, 0.3}};
  std::ostringstream c;
  write_curves_csv(c, {&curve, 1});
  CHECK(c.str() == "x,density,curve_id\n0,1,kde\n0.5,1.25,kde\n");
}

TEST_SUITE_END();
