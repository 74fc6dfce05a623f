#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "perturblab/experiment.hpp"
#include "perturblab/report_io.hpp"

using namespace plab;

namespace {

ExperimentConfig morse_config(int trials = 5) {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::morse;
  cfg.manifold = {"circle", 2, 0};
  cfg.base_map.name = "distance_squared";
  cfg.n = 1;
  cfg.m = 2;
  cfg.l = 1;
  cfg.trials = trials;
  cfg.seed = 20240917;
  cfg.grid.newton_per_axis = 48;
  return cfg;
}

ExperimentConfig injectivity_config(int trials = 3) {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::injectivity;
  cfg.manifold = {"circle", 2, 48};
  cfg.base_map.name = "distance_squared";
  cfg.n = 1;
  cfg.m = 2;
  cfg.l = 3;
  cfg.trials = trials;
  cfg.seed = 7;
  cfg.budgets.max_seeds = 128;
  return cfg;
}

}  // namespace

TEST_CASE("sample_perturbation") {
  SUBCASE("deterministic given the stream") {
    Rng a = Rng::for_trial(42, 3);
    Rng b = Rng::for_trial(42, 3);
    CHECK(sample_perturbation(a, 2, 3, 1.5).matrix ==
          sample_perturbation(b, 2, 3, 1.5).matrix);
    Rng c = Rng::for_trial(42, 4);
    CHECK(sample_perturbation(a, 2, 3, 1.5).matrix !=
          sample_perturbation(c, 2, 3, 1.5).matrix);
  }

  SUBCASE("zero scale gives the zero matrix") {
    Rng rng(1);
    CHECK(sample_perturbation(rng, 3, 4, 0.0).matrix.norm() == 0.0);
  }

  SUBCASE("entry statistics within three standard errors") {
    Rng rng(123);
    const double scale = 0.7;
    const int samples = 1000;
    double sum = 0.0, sumsq = 0.0;
    const int entries = samples * 6;
    for (int i = 0; i < samples; ++i) {
      const Eigen::MatrixXd m = sample_perturbation(rng, 2, 3, scale).matrix;
      sum += m.sum();
      sumsq += m.squaredNorm();
    }
    const double mean = sum / entries;
    const double stddev = std::sqrt(sumsq / entries - mean * mean);
    CHECK(std::abs(mean) < 3.0 * scale / std::sqrt(entries));
    CHECK(std::abs(stddev - scale) < 3.0 * scale / std::sqrt(2.0 * entries));
  }
}

TEST_CASE("morse experiment") {
  const auto report = run_experiment(morse_config());
  CHECK(report.trial_count == 5);
  CHECK(report.pass_count == 5);
  CHECK(report.threshold_met);
  CHECK(report.margin_min > 1e-6);
  REQUIRE(report.control.has_value());
  // Unperturbed |x|^2 on the circle is constant: every point degenerates.
  CHECK_FALSE(report.control->pass);
}

TEST_CASE("immersion and injectivity experiments with degenerate controls") {
  SUBCASE("immersion, l = 2") {
    ExperimentConfig cfg = morse_config(3);
    cfg.scenario = Scenario::immersion;
    cfg.l = 2;
    const auto report = run_experiment(cfg);
    CHECK(report.pass_count == 3);
    REQUIRE(report.control.has_value());
    CHECK_FALSE(report.control->pass);
  }

  SUBCASE("injectivity, l = 3") {
    const auto report = run_experiment(injectivity_config());
    CHECK(report.pass_count == report.trial_count);
    REQUIRE(report.control.has_value());
    CHECK_FALSE(report.control->pass);
    CHECK_FALSE(report.control->error);
  }
}

TEST_CASE("whitney umbrella experiment smoke") {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::whitney_umbrella;
  cfg.manifold = {"sphere2", 3, 8};
  cfg.base_map.name = "gdsm";
  cfg.base_map.coeffs = Eigen::MatrixXd(3, 3);
  cfg.base_map.coeffs << 1, 2, 3, -1, 1, 2, 2, -1, 1;
  cfg.n = 2;
  cfg.m = 3;
  cfg.l = 3;
  cfg.trials = 2;
  cfg.seed = 99;
  cfg.grid.newton_per_axis = 8;
  cfg.grid.sweep_per_axis = 8;
  cfg.control_trial = false;
  const auto report = run_experiment(cfg);
  CHECK(report.trial_count == 2);
  CHECK(report.pass_count == 2);
  for (const auto& t : report.trials) {
    CHECK_FALSE(t.error);
    CHECK(t.central_point.size() == 9);  // psi^{-1} bookkeeping
  }
}

TEST_CASE("normal crossings experiment on the spiral") {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::normal_crossings;
  cfg.manifold = {"spiral", 2, 72};
  cfg.base_map.name = "distance_squared";
  cfg.n = 1;
  cfg.m = 2;
  cfg.l = 2;
  cfg.trials = 2;
  cfg.seed = 31;
  cfg.s_max = 2;
  cfg.budgets.max_seeds = 96;
  cfg.control_trial = false;
  const auto report = run_experiment(cfg);
  CHECK(report.pass_count == 2);
  for (const auto& t : report.trials) {
    CHECK(t.detail.at("checks").get<int>() >= 0);
  }
}

TEST_CASE("oracle and profile scenarios") {
  SUBCASE("m1") {
    ExperimentConfig cfg = morse_config(10);
    cfg.scenario = Scenario::m1_oracle;
    cfg.l = 2;
    cfg.control_trial = false;
    const auto report = run_experiment(cfg);
    CHECK(report.pass_count == 10);
  }

  SUBCASE("m2") {
    ExperimentConfig cfg = morse_config(10);
    cfg.scenario = Scenario::m2_oracle;
    cfg.l = 2;
    cfg.s_max = 3;
    cfg.control_trial = false;
    const auto report = run_experiment(cfg);
    CHECK(report.pass_count == 10);
  }

  SUBCASE("sf profile of the sphere") {
    ExperimentConfig cfg;
    cfg.scenario = Scenario::sf_profile;
    cfg.manifold = {"sphere2", 3, 0};
    cfg.base_map.name = "distance_squared";
    cfg.n = 2;
    cfg.m = 3;
    cfg.l = 3;
    cfg.trials = 1;
    cfg.seed = 5;
    cfg.grid.sweep_per_axis = 10;
    cfg.budgets.sf_tuples = 2000;
    cfg.expected_sf = 3;
    cfg.control_trial = false;
    const auto report = run_experiment(cfg);
    CHECK(report.pass_count == 1);
    CHECK(report.trials[0].detail.at("s_f").get<int>() == 3);
  }

  SUBCASE("fibers") {
    ExperimentConfig cfg;
    cfg.scenario = Scenario::dp_lp_fibers;
    cfg.manifold = {"circle", 2, 0};  // unused by the verdict
    cfg.base_map.name = "distance_squared";
    cfg.n = 1;
    cfg.m = 2;
    cfg.l = 2;
    cfg.trials = 3;
    cfg.seed = 11;
    cfg.budgets.targets = 10;
    cfg.control_trial = false;
    const auto report = run_experiment(cfg);
    CHECK(report.pass_count == 3);
    for (const auto& t : report.trials) {
      CHECK(t.detail.at("max_fiber").get<int>() <= 2);
      CHECK(t.detail.at("min_fiber").get<int>() >= 1);
    }
  }
}

TEST_CASE("corank bound and embedding scenarios") {
  SUBCASE("corank bound on the sphere, l = 2") {
    ExperimentConfig cfg;
    cfg.scenario = Scenario::corank_bound;
    cfg.manifold = {"sphere2", 3, 8};
    cfg.base_map.name = "distance_squared";
    cfg.n = 2;
    cfg.m = 3;
    cfg.l = 2;
    cfg.trials = 3;
    cfg.seed = 55;
    cfg.grid.sweep_per_axis = 8;
    cfg.control_trial = false;
    const auto report = run_experiment(cfg);
    CHECK(report.pass_count == 3);
    for (const auto& t : report.trials) {
      CHECK(t.detail.at("k0").get<int>() == 1);
      CHECK(t.detail.at("max_corank").get<int>() <= 1);
    }
  }

  SUBCASE("embedding on the circle, l = 3") {
    ExperimentConfig cfg = injectivity_config(3);
    cfg.scenario = Scenario::embedding;
    const auto report = run_experiment(cfg);
    CHECK(report.pass_count == 3);
    REQUIRE(report.control.has_value());
    CHECK_FALSE(report.control->pass);  // constant control is no embedding
  }

  SUBCASE("normal form base maps are addressable") {
    ExperimentConfig cfg = injectivity_config(2);
    cfg.scenario = Scenario::immersion;
    cfg.base_map.name = "inclusion";
    cfg.l = 4;
    cfg.control_trial = false;
    const auto report = run_experiment(cfg);
    CHECK(report.pass_count == 2);
  }
}

TEST_CASE("gdsm analog sampling comparison") {
  ExperimentConfig cfg = morse_config(12);
  cfg.scenario = Scenario::gdsm_analog;
  cfg.analog_of = "morse";
  cfg.control_trial = false;
  const auto report = run_experiment(cfg);
  CHECK(report.trial_count == 24);
  CHECK(report.extra.at("indistinguishable").get<bool>());
  CHECK(report.threshold_met);
}

TEST_CASE("replay determinism") {
  const auto a = run_experiment(morse_config());
  const auto b = run_experiment(morse_config());
  CHECK(report_to_json(a).dump(2) == report_to_json(b).dump(2));

  ExperimentConfig mcfg = morse_config(6);
  mcfg.scenario = Scenario::m2_oracle;
  mcfg.l = 2;
  const auto c = run_experiment(mcfg);
  const auto d = run_experiment(mcfg);
  CHECK(report_to_json(c).dump(2) == report_to_json(d).dump(2));
}

TEST_CASE("failures shrink when the tolerance is loosened") {
  const auto report = run_experiment(morse_config(8));
  int previous = report.passes_at(1e-3);
  for (double tol = 1e-4; tol > 1e-9; tol /= 10.0) {
    const int now = report.passes_at(tol);
    CHECK(now >= previous);
    previous = now;
  }
}

TEST_CASE("config validation names the offending field") {
  SUBCASE("injectivity with l = 2n") {
    ExperimentConfig cfg = injectivity_config();
    cfg.l = 2;
    try {
      cfg.validate();
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.field == "dims.l");
      CHECK(std::string(e.what()).find("requires l > 2n") !=
            std::string::npos);
    }
  }

  SUBCASE("unknown manifold") {
    ExperimentConfig cfg = morse_config();
    cfg.manifold.name = "torus";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  SUBCASE("central point sampling needs an invertible psi") {
    ExperimentConfig cfg = morse_config();
    cfg.base_map.name = "zero";
    cfg.sampling = "central_point";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  SUBCASE("whitney dimensions") {
    ExperimentConfig cfg = morse_config();
    cfg.scenario = Scenario::whitney_umbrella;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  SUBCASE("gdsm base requires nonzero coefficients") {
    ExperimentConfig cfg = morse_config();
    cfg.base_map.name = "gdsm";
    cfg.base_map.coeffs = Eigen::MatrixXd::Zero(1, 2);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}

TEST_CASE("config json round trip") {
  ExperimentConfig cfg = injectivity_config();
  cfg.expected_sf = 3;
  const ordered_json j = config_to_json(cfg);
  const ExperimentConfig back = config_from_json(j);
  CHECK(config_to_json(back).dump() == j.dump());
  back.validate();
}

TEST_CASE("the echoed config reproduces the run") {
  const auto report = run_experiment(morse_config(4));
  const ordered_json echoed = report_to_json(report).at("config");
  const ExperimentConfig back = config_from_json(echoed);
  const auto replay = run_experiment(back);
  CHECK(report_to_json(replay).dump(2) == report_to_json(report).dump(2));
}

TEST_CASE("digest and aggregate") {
  SUBCASE("identity aggregation") {
    const auto report = run_experiment(morse_config(4));
    const auto summary = aggregate({digest(report)});
    CHECK(summary.trial_count == 4);
    CHECK(summary.pass_count == report.pass_count);
    CHECK(summary.margin_min == doctest::Approx(report.margin_min));
  }

  SUBCASE("pass counts add across reports") {
    ExperimentConfig c1 = morse_config(3);
    ExperimentConfig c2 = morse_config(4);
    c2.seed = 777;
    const auto s =
        aggregate({digest(run_experiment(c1)), digest(run_experiment(c2))});
    CHECK(s.report_count == 2);
    CHECK(s.trial_count == 7);
    CHECK(s.pass_count == 7);
  }

  SUBCASE("mixed scenarios are rejected") {
    ReportDigest a{"morse", 10, 10, {}, {}};
    ReportDigest b{"immersion", 10, 10, {}, {}};
    CHECK_THROWS_AS(aggregate({a, b}), MixedScenario);
  }

  SUBCASE("wilson interval matches the hand-computed value for 95/100") {
    ReportDigest d{"morse", 100, 95, {}, {}};
    const auto s = aggregate({d});
    CHECK(s.pooled_rate == doctest::Approx(0.95));
    CHECK(s.wilson_low == doctest::Approx(0.888250).epsilon(1e-4));
    CHECK(s.wilson_high == doctest::Approx(0.978457).epsilon(1e-4));
  }
}

TEST_CASE("report serialization carries failing trial replays") {
  // Force failures: an unperturbed constant composition fails morse.
  ExperimentConfig cfg = morse_config(2);
  cfg.perturbation_scale = 0.0;
  cfg.control_trial = false;
  const auto report = run_experiment(cfg);
  CHECK(report.pass_count == 0);
  const ordered_json j = report_to_json(report);
  for (const auto& t : j.at("trials")) {
    CHECK(t.contains("pi"));  // replay data for failures
  }
  CHECK(j.at("failing_seeds").size() == 2);

  const std::string csv = trials_csv(report);
  CHECK(csv.rfind("trial,seed,scenario,pass,margin,witness\n", 0) == 0);
}

TEST_CASE("witness tuples serialize to csv") {
  const ChartedMap nodal = compose_over_atlas(
      SmoothMap(2, 2,
                [](const auto& x) {
                  using S = std::decay_t<decltype(x[0])>;
                  return std::vector<S>(x.begin(), x.end());
                }),
      chart_atlas(ManifoldKind::nodal_cubic, 2));
  const auto report = normal_crossings_verdict(nodal, 2, MultiSearchOptions{});
  REQUIRE(report.checks.size() == 1);
  const std::string csv = witness_csv(nodal, report.checks);
  CHECK(csv.rfind("tuple,chart,params,image,margin\n", 0) == 0);
  // One row per tuple member plus the header.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("2.82842712") != std::string::npos);  // node margin 2*sqrt(2)
}
