#include "perturblab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "perturblab/report_io.hpp"

namespace plab {

Scenario scenario_from_name(const std::string& name) {
  if (name == "morse") return Scenario::morse;
  if (name == "whitney_umbrella") return Scenario::whitney_umbrella;
  if (name == "immersion") return Scenario::immersion;
  if (name == "corank_bound") return Scenario::corank_bound;
  if (name == "injectivity") return Scenario::injectivity;
  if (name == "normal_crossings") return Scenario::normal_crossings;
  if (name == "embedding") return Scenario::embedding;
  if (name == "gdsm_analog") return Scenario::gdsm_analog;
  if (name == "dp_lp_fibers") return Scenario::dp_lp_fibers;
  if (name == "m1_oracle") return Scenario::m1_oracle;
  if (name == "m2_oracle") return Scenario::m2_oracle;
  if (name == "sf_profile") return Scenario::sf_profile;
  throw UnknownKind("unknown scenario: " + name);
}

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::morse: return "morse";
    case Scenario::whitney_umbrella: return "whitney_umbrella";
    case Scenario::immersion: return "immersion";
    case Scenario::corank_bound: return "corank_bound";
    case Scenario::injectivity: return "injectivity";
    case Scenario::normal_crossings: return "normal_crossings";
    case Scenario::embedding: return "embedding";
    case Scenario::gdsm_analog: return "gdsm_analog";
    case Scenario::dp_lp_fibers: return "dp_lp_fibers";
    case Scenario::m1_oracle: return "m1_oracle";
    case Scenario::m2_oracle: return "m2_oracle";
    case Scenario::sf_profile: return "sf_profile";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_gdsm_family(const std::string& base_name) {
  return base_name == "distance_squared" || base_name == "lorentzian" ||
         base_name == "gdsm";
}

bool is_normal_form_base(const std::string& base_name) {
  return base_name == "fold" || base_name == "whitney_umbrella" ||
         base_name == "inclusion";
}

bool is_perturbation_scenario(Scenario s) {
  switch (s) {
    case Scenario::morse:
    case Scenario::whitney_umbrella:
    case Scenario::immersion:
    case Scenario::corank_bound:
    case Scenario::injectivity:
    case Scenario::normal_crossings:
    case Scenario::embedding:
      return true;
    default:
      return false;
  }
}

int expected_intrinsic_dim(ManifoldKind kind) {
  return kind == ManifoldKind::sphere2 ? 2 : 1;
}

}  // namespace

void ExperimentConfig::validate() const {
  ManifoldKind kind;
  try {
    kind = manifold_kind_from_name(manifold.name);
  } catch (const UnknownKind& e) {
    throw ConfigError("manifold.name", e.what());
  }
  if (manifold.ambient_dim != m) {
    throw ConfigError("dims.m", "must equal manifold.ambient_dim");
  }
  if (n != expected_intrinsic_dim(kind)) {
    throw ConfigError("dims.n", "manifold " + manifold.name +
                                    " has intrinsic dimension " +
                                    std::to_string(expected_intrinsic_dim(kind)));
  }
  if (l < 1) throw ConfigError("dims.l", "must be positive");
  if (trials < 1) throw ConfigError("trials", "must be >= 1");
  if (perturbation_scale < 0.0) {
    throw ConfigError("perturbation_scale", "must be >= 0");
  }
  if (pass_rate_threshold < 0.0 || pass_rate_threshold > 1.0) {
    throw ConfigError("pass_rate_threshold", "must lie in [0, 1]");
  }
  if (sampling != "pi" && sampling != "central_point") {
    throw ConfigError("sampling", "must be 'pi' or 'central_point'");
  }
  if (grid.newton_per_axis < 1 || grid.fiber_per_axis < 1 ||
      grid.guard_check < 1 || grid.sweep_per_axis < 0) {
    throw ConfigError("grid", "densities must be positive");
  }
  if (budgets.max_seeds < 1 || budgets.targets < 1 || budgets.sf_tuples < 0 ||
      budgets.sf_subcloud < 3 || budgets.seed_gap <= 0.0 ||
      budgets.fiber_box_halfwidth <= 0.0) {
    throw ConfigError("budgets", "budget values out of range");
  }
  if (tolerances.rank <= 0.0 || tolerances.transversality <= 0.0 ||
      tolerances.newton <= 0.0 || tolerances.coincide <= 0.0 ||
      tolerances.morse_det <= 0.0 || tolerances.immersion <= 0.0) {
    throw ConfigError("tolerances", "tolerances must be positive");
  }

  const std::string& base = base_map.name;
  if (base != "zero" && base != "identity" && !is_gdsm_family(base) &&
      !is_normal_form_base(base)) {
    throw ConfigError("base_map.name", "unknown base map: " + base);
  }
  if ((base == "identity" || base == "fold") && m != l) {
    throw ConfigError("base_map.name", base + " base requires m = l");
  }
  if (base == "whitney_umbrella" && (m < 2 || l != 2 * m - 1)) {
    throw ConfigError("base_map.name",
                      "whitney_umbrella base requires l = 2m-1, m >= 2");
  }
  if (base == "inclusion" && l < m) {
    throw ConfigError("base_map.name", "inclusion base requires l >= m");
  }
  if (base == "gdsm") {
    if (base_map.coeffs.rows() != l || base_map.coeffs.cols() != m) {
      throw ConfigError("base_map.coeffs", "must be an l x m matrix");
    }
    if ((base_map.coeffs.array() == 0.0).any()) {
      throw ConfigError("base_map.coeffs",
                        "gdsm requires all coefficients nonzero");
    }
  }
  if (sampling == "central_point" && !is_gdsm_family(base)) {
    throw ConfigError("sampling",
                      "central_point sampling needs a gdsm-family base map");
  }

  switch (scenario) {
    case Scenario::morse:
      if (l != 1) throw ConfigError("dims.l", "morse requires l = 1");
      break;
    case Scenario::whitney_umbrella:
      if (n < 2 || l != 2 * n - 1) {
        throw ConfigError("dims.l",
                          "whitney_umbrella requires l = 2n-1 and n >= 2");
      }
      break;
    case Scenario::immersion:
      if (l < 2 * n) throw ConfigError("dims.l", "immersion requires l >= 2n");
      break;
    case Scenario::injectivity:
      if (l <= 2 * n) {
        throw ConfigError("dims.l", "injectivity requires l > 2n");
      }
      break;
    case Scenario::embedding:
      if (l <= 2 * n) throw ConfigError("dims.l", "embedding requires l > 2n");
      if (kind != ManifoldKind::circle && kind != ManifoldKind::sphere2) {
        throw ConfigError("manifold.name",
                          "embedding needs a compact catalog manifold");
      }
      break;
    case Scenario::normal_crossings:
      if (s_max < 2) throw ConfigError("s_max", "must be >= 2");
      break;
    case Scenario::m2_oracle:
      if (s_max < 2) throw ConfigError("s_max", "must be >= 2");
      if (s_max > m + 1) {
        throw ConfigError("s_max", "tuple size cannot exceed m + 1");
      }
      break;
    case Scenario::dp_lp_fibers:
      if (m != l) throw ConfigError("dims.l", "dp_lp_fibers requires m = l");
      if (base != "distance_squared" && base != "lorentzian") {
        throw ConfigError("base_map.name",
                          "dp_lp_fibers needs distance_squared or lorentzian");
      }
      if (fiber_bound < 1) throw ConfigError("fiber_bound", "must be >= 1");
      break;
    case Scenario::gdsm_analog: {
      if (!is_gdsm_family(base)) {
        throw ConfigError("base_map.name",
                          "gdsm_analog needs a gdsm-family base map");
      }
      Scenario inner;
      try {
        inner = scenario_from_name(analog_of);
      } catch (const UnknownKind& e) {
        throw ConfigError("analog_of", e.what());
      }
      if (!is_perturbation_scenario(inner)) {
        throw ConfigError("analog_of",
                          "must name a perturbation scenario");
      }
      break;
    }
    case Scenario::sf_profile:
      if (expected_sf && *expected_sf < 2) {
        throw ConfigError("expected_sf", "must be >= 2 when given");
      }
      break;
    default:
      break;
  }
}

LinearPerturbation sample_perturbation(Rng& rng, int l, int m, double scale) {
  if (scale < 0.0) throw InvalidSpec("perturbation scale must be >= 0");
  if (l < 1 || m < 1) throw DimensionMismatch("perturbation dims");
  return LinearPerturbation(rng.gaussian_matrix(l, m, scale));
}

namespace {

struct Env {
  ChartedManifold manifold;
  Eigen::MatrixXd coeffs;  // set for gdsm-family bases
  bool gdsm_base = false;
  GdsmVariant variant = GdsmVariant::distance_squared;
  std::optional<SmoothMap> base;
};

SmoothMap zero_map(int m, int l) {
  return SmoothMap(m, l, [l](const auto& x) {
    using S = std::decay_t<decltype(x[0])>;
    (void)x;
    return std::vector<S>(static_cast<size_t>(l), S(0.0));
  });
}

SmoothMap identity_map(int m) {
  return SmoothMap(m, m, [](const auto& x) {
    using S = std::decay_t<decltype(x[0])>;
    return std::vector<S>(x.begin(), x.end());
  });
}

Env build_env(const ExperimentConfig& cfg) {
  Env env;
  env.manifold = chart_atlas(manifold_kind_from_name(cfg.manifold.name), cfg.m);
  if (cfg.manifold.sample_density > 0) {
    env.manifold.sample_density = cfg.manifold.sample_density;
  }
  env.manifold.validate(cfg.tolerances.rank);

  const std::string& base = cfg.base_map.name;
  if (base == "distance_squared") {
    env.coeffs = Eigen::MatrixXd::Ones(cfg.l, cfg.m);
    env.gdsm_base = true;
    env.variant = GdsmVariant::distance_squared;
  } else if (base == "lorentzian") {
    env.coeffs = Eigen::MatrixXd::Ones(cfg.l, cfg.m);
    env.coeffs.col(0).setConstant(-1.0);
    env.gdsm_base = true;
    env.variant = GdsmVariant::lorentzian;
  } else if (base == "gdsm") {
    env.coeffs = cfg.base_map.coeffs;
    env.gdsm_base = true;
    env.variant = GdsmVariant::general;
  }

  if (env.gdsm_base) {
    env.base = gdsm_quadratic_part(env.coeffs);
  } else if (base == "zero") {
    env.base = zero_map(cfg.m, cfg.l);
  } else if (base == "identity") {
    env.base = identity_map(cfg.m);
  } else if (base == "fold" || base == "whitney_umbrella" ||
             base == "inclusion") {
    env.base = normal_form(normal_form_kind_from_name(base), cfg.m, cfg.l);
  }
  return env;
}

struct TrialOutcome {
  bool pass = false;
  double margin = 0.0;
  std::string witness;
  ordered_json detail;
};

SearchOptions point_search_options(const ExperimentConfig& cfg) {
  SearchOptions opt;
  opt.grid_per_axis = cfg.grid.newton_per_axis;
  opt.newton_tol = cfg.tolerances.newton;
  opt.singular_tol = cfg.tolerances.rank;
  opt.cluster_radius = 1e-6;
  return opt;
}

MultiSearchOptions multi_search_options(const ExperimentConfig& cfg) {
  MultiSearchOptions opt;
  opt.grid_per_axis = cfg.grid.sweep_per_axis;
  opt.max_seeds = cfg.budgets.max_seeds;
  opt.seed_gap = cfg.budgets.seed_gap;
  opt.newton_tol = cfg.tolerances.newton;
  opt.coincide_tol = cfg.tolerances.coincide;
  opt.cluster_radius = 10.0 * cfg.tolerances.newton;
  return opt;
}

TrialOutcome morse_outcome(const ExperimentConfig& cfg, const ChartedMap& g) {
  const auto points = find_singular_points(g, point_search_options(cfg));
  TrialOutcome out;
  out.pass = true;
  out.margin = kInf;
  int critical = 0;
  int degenerate = 0;
  for (const auto& p : points) {
    const auto verdict =
        morse_verdict(g.maps[p.chart], p.param, cfg.tolerances.morse_det);
    if (verdict == MorseClass::regular) continue;
    ++critical;
    const auto jet = g.maps[p.chart].eval_jet2(p.param);
    out.margin = std::min(out.margin, std::abs(jet.hess[0].determinant()));
    if (verdict == MorseClass::degenerate_critical) {
      ++degenerate;
      out.pass = false;
      if (out.witness.empty()) out.witness = format_point(p.chart, p.param);
    }
  }
  out.detail = {{"critical_points", critical}, {"degenerate", degenerate}};
  return out;
}

TrialOutcome whitney_outcome(const ExperimentConfig& cfg, const ChartedMap& g) {
  const auto points = find_singular_points(g, point_search_options(cfg));
  TrialOutcome out;
  out.pass = true;
  out.margin = kInf;
  int umbrellas = 0;
  for (const auto& p : points) {
    const auto verdict =
        sigma_transversality(g.maps[p.chart], p.param, 1,
                             cfg.tolerances.transversality,
                             cfg.tolerances.rank);
    out.margin = std::min(out.margin, verdict.margin);
    if (verdict.on_stratum && verdict.transverse) {
      ++umbrellas;
    } else {
      out.pass = false;
      if (out.witness.empty()) out.witness = format_point(p.chart, p.param);
    }
  }
  const auto bound =
      corank_bound_check(g, cfg.grid.sweep_per_axis, cfg.tolerances.rank);
  if (!bound.respects_bound) {
    out.pass = false;
    if (out.witness.empty()) {
      out.witness = format_point(bound.witness_chart, bound.witness);
    }
  }
  out.detail = {{"singular_points", static_cast<int>(points.size())},
                {"umbrellas", umbrellas},
                {"max_corank", bound.max_corank_observed},
                {"k0", bound.k0}};
  return out;
}

TrialOutcome immersion_outcome(const ExperimentConfig& cfg,
                               const ChartedMap& g) {
  const auto report =
      immersion_check(g, cfg.grid.sweep_per_axis, cfg.tolerances.immersion);
  TrialOutcome out;
  out.pass = report.is_immersion_at_samples;
  out.margin = report.min_singular_value;
  if (!out.pass) out.witness = format_point(report.witness_chart, report.witness);
  out.detail = {{"min_singular_value", json_number(report.min_singular_value)}};
  return out;
}

TrialOutcome corank_bound_outcome(const ExperimentConfig& cfg,
                                  const ChartedMap& g) {
  const auto report =
      corank_bound_check(g, cfg.grid.sweep_per_axis, cfg.tolerances.rank);
  TrialOutcome out;
  out.pass = report.respects_bound;
  out.margin = report.margin;
  if (!out.pass) {
    out.witness = format_point(report.witness_chart, report.witness);
  }
  out.detail = {{"max_corank", report.max_corank_observed}, {"k0", report.k0}};
  return out;
}

TrialOutcome injectivity_outcome(const ExperimentConfig& cfg,
                                 const ChartedMap& g) {
  const auto report = injectivity_check(g, multi_search_options(cfg));
  TrialOutcome out;
  out.pass = report.is_injective_at_resolution;
  out.margin = report.min_image_gap;
  if (report.witness) out.witness = format_tuple(*report.witness);
  out.detail = {{"min_image_gap", json_number(report.min_image_gap)},
                {"budget_exhausted", report.budget_exhausted}};
  return out;
}

TrialOutcome normal_crossings_outcome(const ExperimentConfig& cfg,
                                      const ChartedMap& g) {
  const auto report = normal_crossings_verdict(
      g, cfg.s_max, multi_search_options(cfg), cfg.tolerances.rank);
  TrialOutcome out;
  out.pass = report.is_normal_crossings_at_found_points;
  out.margin = report.min_margin;
  int on_stratum = 0;
  for (const auto& check : report.checks) {
    if (check.verdict.on_stratum) {
      ++on_stratum;
      if (!check.verdict.transverse && out.witness.empty()) {
        out.witness = format_tuple(check.point);
      }
    }
  }
  out.detail = {{"checks", static_cast<int>(report.checks.size())},
                {"on_stratum", on_stratum},
                {"budget_exhausted", report.budget_exhausted}};
  return out;
}

TrialOutcome embedding_outcome(const ExperimentConfig& cfg,
                               const ChartedMap& g) {
  const auto imm =
      immersion_check(g, cfg.grid.sweep_per_axis, cfg.tolerances.immersion);
  const auto inj = injectivity_check(g, multi_search_options(cfg));
  TrialOutcome out;
  out.pass = imm.is_immersion_at_samples && inj.is_injective_at_resolution;
  out.margin = imm.min_singular_value;
  if (!imm.is_immersion_at_samples) {
    out.witness = format_point(imm.witness_chart, imm.witness);
  } else if (inj.witness) {
    out.witness = format_tuple(*inj.witness);
  }
  out.detail = {{"min_singular_value", json_number(imm.min_singular_value)},
                {"min_image_gap", json_number(inj.min_image_gap)}};
  return out;
}

TrialOutcome fibers_outcome(const ExperimentConfig& cfg, const Env& env,
                            Rng& rng, TrialRecord& rec) {
  const Eigen::MatrixXd centers =
      rng.gaussian_matrix(cfg.l, cfg.m, cfg.perturbation_scale);
  rec.central_point = centers;
  GdsmSpec spec;
  spec.centers = centers;
  spec.coeffs = env.coeffs;
  spec.variant = env.variant;
  const SmoothMap f = make_gdsm(spec);

  Box box;
  box.lo = Eigen::VectorXd::Constant(cfg.m, -cfg.budgets.fiber_box_halfwidth);
  box.hi = Eigen::VectorXd::Constant(cfg.m, cfg.budgets.fiber_box_halfwidth);
  FiberOptions fopt;
  fopt.grid_per_axis = cfg.grid.fiber_per_axis;

  int max_count = 0;
  int min_count = std::numeric_limits<int>::max();
  for (int t = 0; t < cfg.budgets.targets; ++t) {
    const Eigen::VectorXd x = rng.uniform_vector(box.lo, box.hi);
    const Eigen::VectorXd y = f.evaluate(x);
    const int count = fiber_cardinality(f, y, box, fopt);
    max_count = std::max(max_count, count);
    min_count = std::min(min_count, count);
  }
  TrialOutcome out;
  out.pass = max_count <= cfg.fiber_bound;
  out.margin = static_cast<double>(cfg.fiber_bound - max_count);
  out.detail = {{"max_fiber", max_count},
                {"min_fiber", min_count},
                {"targets", cfg.budgets.targets}};
  return out;
}

TrialOutcome m1_outcome(const ExperimentConfig& cfg, const Env& env, Rng& rng,
                        TrialRecord& rec) {
  const int chart = static_cast<int>(rng.index(env.manifold.charts.size()));
  const Box& box = env.manifold.charts[chart].box;
  const Eigen::VectorXd t = rng.uniform_vector(box.lo, box.hi);
  const LinearPerturbation alpha =
      sample_perturbation(rng, cfg.l, cfg.m, cfg.perturbation_scale);
  rec.pi = alpha.matrix;
  const SmoothMap outer = perturb(*env.base, alpha);
  const auto res = build_m1(env.manifold.charts[chart].map, outer, t, alpha,
                            cfg.tolerances.rank);
  TrialOutcome out;
  out.pass = res.rank == res.expected_rank;
  out.margin = kth_singular_value(res.matrix, res.expected_rank);
  out.witness = format_point(chart, t);
  out.detail = {{"rank", res.rank}, {"expected_rank", res.expected_rank}};
  return out;
}

TrialOutcome m2_outcome(const ExperimentConfig& cfg, const Env& env, Rng& rng,
                        TrialRecord& rec) {
  const LinearPerturbation alpha =
      sample_perturbation(rng, cfg.l, cfg.m, cfg.perturbation_scale);
  rec.pi = alpha.matrix;
  const auto grid = env.manifold.sample_grid();
  const int s = cfg.s_max;

  for (int attempt = 0; attempt < 50; ++attempt) {
    std::vector<int> picks;
    while (static_cast<int>(picks.size()) < s) {
      const int idx = static_cast<int>(rng.index(grid.size()));
      if (std::find(picks.begin(), picks.end(), idx) == picks.end()) {
        picks.push_back(idx);
      }
    }
    std::vector<Eigen::VectorXd> values;
    values.reserve(picks.size());
    for (int idx : picks) values.push_back(grid[idx].image);
    M2Result res;
    try {
      res = build_m2(values, alpha, cfg.tolerances.rank);
    } catch (const DegenerateTuple&) {
      continue;
    }
    if (!res.differences_independent) continue;  // tuple not certified
    TrialOutcome out;
    out.pass = res.rank == res.expected_rank &&
               res.reduced_rank == res.expected_rank;
    out.margin = kth_singular_value(res.matrix, res.expected_rank);
    out.detail = {{"rank", res.rank},
                  {"reduced_rank", res.reduced_rank},
                  {"expected_rank", res.expected_rank},
                  {"difference_rank", res.difference_rank},
                  {"attempts", attempt + 1}};
    return out;
  }
  TrialOutcome out;
  out.pass = false;
  out.margin = 0.0;
  out.detail = {{"error", "no certified independent tuple found"}};
  return out;
}

TrialOutcome sf_outcome(const ExperimentConfig& cfg, const Env& env,
                        Rng& rng) {
  SfEstimateOptions opt;
  opt.grid_per_axis = cfg.grid.sweep_per_axis;
  opt.subcloud_size = cfg.budgets.sf_subcloud;
  opt.random_tuples = cfg.budgets.sf_tuples;
  opt.seed = rng.raw();
  opt.rank_tol = cfg.tolerances.rank;
  const auto profile = estimate_sf(env.manifold, opt);
  TrialOutcome out;
  out.pass = profile.bound_ok &&
             (!cfg.expected_sf || profile.s_f == *cfg.expected_sf);
  out.margin = kInf;
  for (const auto& w : profile.witnesses) {
    out.margin = std::min(out.margin, w.margin);
  }
  out.detail = sf_profile_to_json(profile);
  return out;
}

TrialRecord run_trial(const ExperimentConfig& cfg, const Env& env, int trial,
                      bool control) {
  TrialRecord rec;
  rec.trial = control ? -1 : trial;
  const std::uint64_t stream = control ? 0x636f6e74726f6cULL
                                       : static_cast<std::uint64_t>(trial);
  rec.seed = Rng::stream_id(cfg.seed, stream);
  Rng rng(rec.seed);
  try {
    TrialOutcome out;
    if (is_perturbation_scenario(cfg.scenario)) {
      LinearPerturbation alpha = LinearPerturbation::zero(cfg.l, cfg.m);
      if (!control) {
        if (cfg.sampling == "central_point") {
          // Uniform central points pushed through psi; the absolutely
          // continuous law is what the genericity statement needs.
          Eigen::MatrixXd p(cfg.l, cfg.m);
          for (int i = 0; i < cfg.l; ++i) {
            for (int j = 0; j < cfg.m; ++j) {
              p(i, j) = rng.uniform(-cfg.perturbation_scale,
                                    cfg.perturbation_scale);
            }
          }
          rec.central_point = p;
          GdsmSpec spec;
          spec.centers = p;
          spec.coeffs = env.coeffs;
          spec.variant = env.variant;
          alpha = psi_central_to_linear(spec);
        } else {
          alpha = sample_perturbation(rng, cfg.l, cfg.m,
                                      cfg.perturbation_scale);
          if (env.gdsm_base) {
            rec.central_point = psi_linear_to_central(alpha, env.coeffs);
          }
        }
      }
      rec.pi = alpha.matrix;
      const ChartedMap g = compose_over_atlas(perturb(*env.base, alpha),
                                              env.manifold,
                                              cfg.grid.guard_check);
      switch (cfg.scenario) {
        case Scenario::morse: out = morse_outcome(cfg, g); break;
        case Scenario::whitney_umbrella: out = whitney_outcome(cfg, g); break;
        case Scenario::immersion: out = immersion_outcome(cfg, g); break;
        case Scenario::corank_bound: out = corank_bound_outcome(cfg, g); break;
        case Scenario::injectivity: out = injectivity_outcome(cfg, g); break;
        case Scenario::normal_crossings:
          out = normal_crossings_outcome(cfg, g);
          break;
        case Scenario::embedding: out = embedding_outcome(cfg, g); break;
        default: break;
      }
    } else {
      switch (cfg.scenario) {
        case Scenario::dp_lp_fibers:
          out = fibers_outcome(cfg, env, rng, rec);
          break;
        case Scenario::m1_oracle: out = m1_outcome(cfg, env, rng, rec); break;
        case Scenario::m2_oracle: out = m2_outcome(cfg, env, rng, rec); break;
        case Scenario::sf_profile: out = sf_outcome(cfg, env, rng); break;
        default:
          throw InvalidSpec("scenario not runnable per trial");
      }
    }
    rec.pass = out.pass;
    rec.margin = out.margin;
    rec.witness = std::move(out.witness);
    rec.detail = std::move(out.detail);
  } catch (const std::exception& e) {
    rec.error = true;
    rec.error_message = e.what();
    rec.pass = false;
    rec.margin = 0.0;
  }
  return rec;
}

void finalize_report(ExperimentReport& report) {
  report.trial_count = static_cast<int>(report.trials.size());
  report.pass_count = 0;
  std::vector<double> margins;
  for (const auto& t : report.trials) {
    if (t.pass) ++report.pass_count;
    if (!t.pass || t.error) report.failing_seeds.push_back(t.seed);
    if (!t.error) margins.push_back(t.margin);
  }
  if (margins.empty()) {
    report.margin_min = 0.0;
    report.margin_median = 0.0;
  } else {
    std::sort(margins.begin(), margins.end());
    report.margin_min = margins.front();
    const size_t h = margins.size() / 2;
    report.margin_median = margins.size() % 2 == 1
                               ? margins[h]
                               : 0.5 * (margins[h - 1] + margins[h]);
  }
  const double rate = static_cast<double>(report.pass_count) /
                      static_cast<double>(report.trial_count);
  report.threshold_met = rate >= report.config.pass_rate_threshold - 1e-12;
}

ExperimentReport run_gdsm_analog(const ExperimentConfig& cfg) {
  ExperimentConfig inner = cfg;
  inner.scenario = scenario_from_name(cfg.analog_of);
  inner.control_trial = false;

  ExperimentConfig cfg_pi = inner;
  cfg_pi.sampling = "pi";
  ExperimentConfig cfg_p = inner;
  cfg_p.sampling = "central_point";
  cfg_p.seed = cfg.seed ^ 0x9e3779b97f4a7c15ULL;

  const ExperimentReport rep_pi = run_experiment(cfg_pi);
  const ExperimentReport rep_p = run_experiment(cfg_p);

  ExperimentReport report;
  report.config = cfg;
  report.trials = rep_pi.trials;
  for (auto t : rep_p.trials) {
    t.trial += rep_pi.trial_count;
    report.trials.push_back(std::move(t));
  }
  finalize_report(report);

  // Two-sided two-proportion z-test at significance 0.01: sampling central
  // points and sampling perturbations must be statistically indistinguishable.
  const double n1 = rep_pi.trial_count;
  const double n2 = rep_p.trial_count;
  const double p1 = rep_pi.pass_count / n1;
  const double p2 = rep_p.pass_count / n2;
  const double pooled = (rep_pi.pass_count + rep_p.pass_count) / (n1 + n2);
  const double denom =
      std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
  const double z = denom > 0.0 ? (p1 - p2) / denom : 0.0;
  const double z_critical = 2.5758293035489004;  // two-sided, alpha = 0.01
  const bool indistinguishable = std::abs(z) < z_critical;

  report.extra = {{"mode_pi",
                   {{"trials", rep_pi.trial_count},
                    {"passes", rep_pi.pass_count},
                    {"threshold_met", rep_pi.threshold_met}}},
                  {"mode_central_point",
                   {{"trials", rep_p.trial_count},
                    {"passes", rep_p.pass_count},
                    {"threshold_met", rep_p.threshold_met}}},
                  {"z", json_number(z)},
                  {"z_critical", z_critical},
                  {"indistinguishable", indistinguishable}};
  report.threshold_met =
      rep_pi.threshold_met && rep_p.threshold_met && indistinguishable;
  return report;
}

}  // namespace

int ExperimentReport::passes_at(double margin_threshold) const {
  int count = 0;
  for (const auto& t : trials) {
    if (!t.error && t.margin > margin_threshold) ++count;
  }
  return count;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  if (config.scenario == Scenario::gdsm_analog) {
    ExperimentReport report = run_gdsm_analog(config);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return report;
  }

  const Env env = build_env(config);
  ExperimentReport report;
  report.config = config;
  report.trials.resize(config.trials);

  const unsigned workers = std::max(
      1u, std::min(std::thread::hardware_concurrency(),
                   static_cast<unsigned>(config.trials)));
  if (workers <= 1) {
    for (int i = 0; i < config.trials; ++i) {
      report.trials[i] = run_trial(config, env, i, false);
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < config.trials;
             i = next.fetch_add(1)) {
          report.trials[i] = run_trial(config, env, i, false);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  if (config.control_trial) {
    report.control = run_trial(config, env, 0, true);
  }
  finalize_report(report);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

ReportDigest digest(const ExperimentReport& report) {
  ReportDigest d;
  d.scenario = scenario_name(report.config.scenario);
  d.trial_count = report.trial_count;
  d.pass_count = report.pass_count;
  for (const auto& t : report.trials) {
    if (!t.error) d.margins.push_back(t.margin);
  }
  d.failing_seeds = report.failing_seeds;
  return d;
}

AggregateSummary aggregate(const std::vector<ReportDigest>& digests) {
  if (digests.empty()) throw TooFewPoints("nothing to aggregate");
  AggregateSummary summary;
  summary.scenario = digests.front().scenario;
  std::vector<double> margins;
  for (const auto& d : digests) {
    if (d.scenario != summary.scenario) {
      throw MixedScenario("cannot pool " + summary.scenario + " with " +
                          d.scenario);
    }
    summary.report_count += 1;
    summary.trial_count += d.trial_count;
    summary.pass_count += d.pass_count;
    margins.insert(margins.end(), d.margins.begin(), d.margins.end());
    summary.failing_seeds.insert(summary.failing_seeds.end(),
                                 d.failing_seeds.begin(),
                                 d.failing_seeds.end());
  }
  const double n = summary.trial_count;
  const double p = summary.trial_count > 0 ? summary.pass_count / n : 0.0;
  summary.pooled_rate = p;
  // Wilson score interval at 95%.
  const double z = 1.959963984540054;
  const double z2 = z * z;
  const double center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  summary.wilson_low = std::max(0.0, center - half);
  summary.wilson_high = std::min(1.0, center + half);
  if (margins.empty()) {
    summary.margin_min = 0.0;
    summary.margin_median = 0.0;
  } else {
    std::sort(margins.begin(), margins.end());
    summary.margin_min = margins.front();
    const size_t h = margins.size() / 2;
    summary.margin_median = margins.size() % 2 == 1
                                ? margins[h]
                                : 0.5 * (margins[h - 1] + margins[h]);
  }
  return summary;
}

}  // namespace plab
