#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "perturblab/multi_lab.hpp"
#include "perturblab/rng.hpp"

namespace plab {

using ordered_json = nlohmann::ordered_json;

enum class Scenario {
  morse,
  whitney_umbrella,
  immersion,
  corank_bound,
  injectivity,
  normal_crossings,
  embedding,
  gdsm_analog,
  dp_lp_fibers,
  m1_oracle,
  m2_oracle,
  sf_profile,
};

Scenario scenario_from_name(const std::string& name);
std::string scenario_name(Scenario s);

struct ManifoldConfig {
  std::string name = "circle";
  int ambient_dim = 2;
  int sample_density = 0;  // 0: catalog default
};

struct BaseMapConfig {
  // distance_squared | lorentzian | gdsm | zero | identity
  std::string name = "distance_squared";
  Eigen::MatrixXd coeffs;  // gdsm only; l x m, all entries nonzero
};

struct ToleranceConfig {
  double rank = 1e-8;
  double transversality = 1e-6;
  double newton = 1e-10;
  double coincide = 1e-8;
  double morse_det = 1e-6;
  double immersion = 1e-6;
};

struct GridConfig {
  int newton_per_axis = 64;  // seeds per axis for point searches
  int sweep_per_axis = 0;    // grid sweeps (0: manifold density)
  int fiber_per_axis = 9;
  int guard_check = 8;
};

struct BudgetConfig {
  int max_seeds = 256;
  int targets = 100;          // fiber targets per trial
  long sf_tuples = 20000;
  int sf_subcloud = 12;
  double seed_gap = 0.5;
  double fiber_box_halfwidth = 6.0;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::morse;
  ManifoldConfig manifold;
  BaseMapConfig base_map;
  int n = 1;
  int m = 2;
  int l = 1;
  int trials = 100;
  double perturbation_scale = 1.0;
  std::uint64_t seed = 0;
  std::string sampling = "pi";  // pi | central_point
  int s_max = 3;                // crossing depth / certificate tuple size
  int fiber_bound = 2;
  std::optional<int> expected_sf;
  std::string analog_of = "morse";  // inner scenario of gdsm_analog
  bool control_trial = true;
  double pass_rate_threshold = 0.99;
  ToleranceConfig tolerances;
  GridConfig grid;
  BudgetConfig budgets;

  /// Full structural validation; throws ConfigError naming the field.
  void validate() const;
};

struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  bool pass = false;
  bool error = false;
  std::string error_message;
  double margin = 0.0;
  std::string witness;
  Eigen::MatrixXd pi;             // sampled perturbation (kept for replay)
  Eigen::MatrixXd central_point;  // gdsm central point, when applicable
  ordered_json detail;
};

struct ExperimentReport {
  ExperimentConfig config;
  int trial_count = 0;
  int pass_count = 0;
  bool threshold_met = false;
  double margin_min = 0.0;
  double margin_median = 0.0;
  std::vector<std::uint64_t> failing_seeds;
  std::vector<TrialRecord> trials;
  std::optional<TrialRecord> control;
  ordered_json extra;
  double wall_seconds = 0.0;  // volatile; serialized to the run sidecar only

  /// Trials whose margin survives a different threshold; loosening the
  /// tolerance can only grow this count.
  int passes_at(double margin_threshold) const;
};

/// Gaussian l x m matrix with entry standard deviation = scale; deterministic
/// in the rng state. scale = 0 gives the zero perturbation for control runs.
LinearPerturbation sample_perturbation(Rng& rng, int l, int m, double scale);

ExperimentReport run_experiment(const ExperimentConfig& config);

struct ReportDigest {
  std::string scenario;
  int trial_count = 0;
  int pass_count = 0;
  std::vector<double> margins;
  std::vector<std::uint64_t> failing_seeds;
};

struct AggregateSummary {
  std::string scenario;
  int report_count = 0;
  int trial_count = 0;
  int pass_count = 0;
  double pooled_rate = 0.0;
  double wilson_low = 0.0;
  double wilson_high = 0.0;
  double margin_min = 0.0;
  double margin_median = 0.0;
  std::vector<std::uint64_t> failing_seeds;
};

ReportDigest digest(const ExperimentReport& report);
AggregateSummary aggregate(const std::vector<ReportDigest>& digests);

}  // namespace plab
