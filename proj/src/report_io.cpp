#include "perturblab/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace plab {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (int i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const ordered_json& j) {
  if (!j.is_array() || j.empty()) return {};
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  }
  return m;
}

template <class T>
T field_or(const ordered_json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(key, e.what());
  }
}

}  // namespace

ordered_json json_number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double number_from_json(const ordered_json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  return j.get<double>();
}

std::string format_point(int chart, const Eigen::VectorXd& v) {
  std::string out = "c" + std::to_string(chart) + ":(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += "|";
    out += fmt(v(i));
  }
  out += ")";
  return out;
}

std::string format_tuple(const MultiPoint& mp) {
  std::string out;
  for (int i = 0; i < mp.s(); ++i) {
    if (i) out += "&";
    out += format_point(mp.charts[i], mp.params[i]);
  }
  return out;
}

ordered_json config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["scenario"] = scenario_name(c.scenario);
  j["manifold"] = {{"name", c.manifold.name},
                   {"ambient_dim", c.manifold.ambient_dim},
                   {"sample_density", c.manifold.sample_density}};
  j["base_map"] = {{"name", c.base_map.name},
                   {"coeffs", c.base_map.coeffs.size() > 0
                                  ? matrix_to_json(c.base_map.coeffs)
                                  : ordered_json()}};
  j["dims"] = {{"n", c.n}, {"m", c.m}, {"l", c.l}};
  j["trials"] = c.trials;
  j["perturbation_scale"] = c.perturbation_scale;
  j["seed"] = c.seed;
  j["sampling"] = c.sampling;
  j["s_max"] = c.s_max;
  j["fiber_bound"] = c.fiber_bound;
  j["expected_sf"] = c.expected_sf ? ordered_json(*c.expected_sf)
                                   : ordered_json();
  j["analog_of"] = c.analog_of;
  j["control_trial"] = c.control_trial;
  j["pass_rate_threshold"] = c.pass_rate_threshold;
  j["tolerances"] = {{"rank", c.tolerances.rank},
                     {"transversality", c.tolerances.transversality},
                     {"newton", c.tolerances.newton},
                     {"coincide", c.tolerances.coincide},
                     {"morse_det", c.tolerances.morse_det},
                     {"immersion", c.tolerances.immersion}};
  j["grid"] = {{"newton_per_axis", c.grid.newton_per_axis},
               {"sweep_per_axis", c.grid.sweep_per_axis},
               {"fiber_per_axis", c.grid.fiber_per_axis},
               {"guard_check", c.grid.guard_check}};
  j["budgets"] = {{"max_seeds", c.budgets.max_seeds},
                  {"targets", c.budgets.targets},
                  {"sf_tuples", c.budgets.sf_tuples},
                  {"sf_subcloud", c.budgets.sf_subcloud},
                  {"seed_gap", c.budgets.seed_gap},
                  {"fiber_box_halfwidth", c.budgets.fiber_box_halfwidth}};
  return j;
}

ExperimentConfig config_from_json(const ordered_json& j) {
  ExperimentConfig c;
  if (!j.is_object()) throw ConfigError("<root>", "config must be an object");
  if (!j.contains("scenario")) {
    throw ConfigError("scenario", "missing required field");
  }
  try {
    c.scenario = scenario_from_name(j.at("scenario").get<std::string>());
  } catch (const UnknownKind& e) {
    throw ConfigError("scenario", e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenario", e.what());
  }
  const ordered_json empty = ordered_json::object();
  const ordered_json& man = j.contains("manifold") ? j.at("manifold") : empty;
  c.manifold.name = field_or<std::string>(man, "name", c.manifold.name);
  c.manifold.ambient_dim =
      field_or<int>(man, "ambient_dim", c.manifold.ambient_dim);
  c.manifold.sample_density =
      field_or<int>(man, "sample_density", c.manifold.sample_density);

  const ordered_json& base = j.contains("base_map") ? j.at("base_map") : empty;
  c.base_map.name = field_or<std::string>(base, "name", c.base_map.name);
  if (base.contains("coeffs") && !base.at("coeffs").is_null()) {
    c.base_map.coeffs = matrix_from_json(base.at("coeffs"));
  }

  const ordered_json& dims = j.contains("dims") ? j.at("dims") : empty;
  c.n = field_or<int>(dims, "n", c.n);
  c.m = field_or<int>(dims, "m", c.m);
  c.l = field_or<int>(dims, "l", c.l);

  c.trials = field_or<int>(j, "trials", c.trials);
  c.perturbation_scale =
      field_or<double>(j, "perturbation_scale", c.perturbation_scale);
  c.seed = field_or<std::uint64_t>(j, "seed", c.seed);
  c.sampling = field_or<std::string>(j, "sampling", c.sampling);
  c.s_max = field_or<int>(j, "s_max", c.s_max);
  c.fiber_bound = field_or<int>(j, "fiber_bound", c.fiber_bound);
  if (j.contains("expected_sf") && !j.at("expected_sf").is_null()) {
    c.expected_sf = j.at("expected_sf").get<int>();
  }
  c.analog_of = field_or<std::string>(j, "analog_of", c.analog_of);
  c.control_trial = field_or<bool>(j, "control_trial", c.control_trial);
  c.pass_rate_threshold =
      field_or<double>(j, "pass_rate_threshold", c.pass_rate_threshold);

  const ordered_json& tol = j.contains("tolerances") ? j.at("tolerances")
                                                     : empty;
  c.tolerances.rank = field_or<double>(tol, "rank", c.tolerances.rank);
  c.tolerances.transversality =
      field_or<double>(tol, "transversality", c.tolerances.transversality);
  c.tolerances.newton = field_or<double>(tol, "newton", c.tolerances.newton);
  c.tolerances.coincide =
      field_or<double>(tol, "coincide", c.tolerances.coincide);
  c.tolerances.morse_det =
      field_or<double>(tol, "morse_det", c.tolerances.morse_det);
  c.tolerances.immersion =
      field_or<double>(tol, "immersion", c.tolerances.immersion);

  const ordered_json& grid = j.contains("grid") ? j.at("grid") : empty;
  c.grid.newton_per_axis =
      field_or<int>(grid, "newton_per_axis", c.grid.newton_per_axis);
  c.grid.sweep_per_axis =
      field_or<int>(grid, "sweep_per_axis", c.grid.sweep_per_axis);
  c.grid.fiber_per_axis =
      field_or<int>(grid, "fiber_per_axis", c.grid.fiber_per_axis);
  c.grid.guard_check = field_or<int>(grid, "guard_check", c.grid.guard_check);

  const ordered_json& bud = j.contains("budgets") ? j.at("budgets") : empty;
  c.budgets.max_seeds = field_or<int>(bud, "max_seeds", c.budgets.max_seeds);
  c.budgets.targets = field_or<int>(bud, "targets", c.budgets.targets);
  c.budgets.sf_tuples = field_or<long>(bud, "sf_tuples", c.budgets.sf_tuples);
  c.budgets.sf_subcloud =
      field_or<int>(bud, "sf_subcloud", c.budgets.sf_subcloud);
  c.budgets.seed_gap = field_or<double>(bud, "seed_gap", c.budgets.seed_gap);
  c.budgets.fiber_box_halfwidth = field_or<double>(
      bud, "fiber_box_halfwidth", c.budgets.fiber_box_halfwidth);
  return c;
}

ordered_json verdict_to_json(const TransversalityVerdict& v) {
  return {{"on_stratum", v.on_stratum},
          {"corank", v.corank},
          {"margin", json_number(v.margin)},
          {"transverse", v.transverse},
          {"codim", v.codim}};
}

ordered_json sf_profile_to_json(const SfProfile& p) {
  ordered_json witnesses = ordered_json::array();
  for (const auto& w : p.witnesses) {
    witnesses.push_back(
        {{"indices", w.indices}, {"margin", json_number(w.margin)}});
  }
  ordered_json j{{"s_f", p.s_f},
                 {"exhaustive", p.exhaustive},
                 {"bound_ok", p.bound_ok},
                 {"ambient_dim", p.ambient_dim},
                 {"cloud_size", p.cloud_size},
                 {"tuples_checked", p.tuples_checked},
                 {"witnesses", std::move(witnesses)}};
  j["dependent_tuple"] =
      p.dependent_tuple
          ? ordered_json{{"indices", p.dependent_tuple->indices},
                         {"margin", json_number(p.dependent_tuple->margin)}}
          : ordered_json();
  return j;
}

namespace {

ordered_json trial_to_json(const TrialRecord& t) {
  ordered_json j;
  j["trial"] = t.trial;
  j["seed"] = t.seed;
  j["pass"] = t.pass;
  j["margin"] = json_number(t.margin);
  j["witness"] = t.witness;
  if (t.error) j["error"] = t.error_message;
  if (!t.detail.is_null()) j["detail"] = t.detail;
  // Failing trials carry the sampled matrices so the case can be replayed.
  if ((!t.pass || t.error) && t.pi.size() > 0) j["pi"] = matrix_to_json(t.pi);
  if ((!t.pass || t.error) && t.central_point.size() > 0) {
    j["central_point"] = matrix_to_json(t.central_point);
  }
  return j;
}

}  // namespace

ordered_json report_to_json(const ExperimentReport& report) {
  ordered_json j;
  j["schema"] = "perturblab-report-v1";
  j["scenario"] = scenario_name(report.config.scenario);
  j["config"] = config_to_json(report.config);
  j["trial_count"] = report.trial_count;
  j["pass_count"] = report.pass_count;
  j["pass_rate"] = report.trial_count > 0
                       ? json_number(static_cast<double>(report.pass_count) /
                                     report.trial_count)
                       : json_number(0.0);
  j["threshold_met"] = report.threshold_met;
  j["margin_min"] = json_number(report.margin_min);
  j["margin_median"] = json_number(report.margin_median);
  j["failing_seeds"] = report.failing_seeds;
  j["control"] = report.control ? trial_to_json(*report.control)
                                : ordered_json();
  j["extra"] = report.extra.is_null() ? ordered_json::object() : report.extra;
  ordered_json trials = ordered_json::array();
  for (const auto& t : report.trials) trials.push_back(trial_to_json(t));
  j["trials"] = std::move(trials);
  return j;
}

ReportDigest digest_from_json(const ordered_json& j) {
  ReportDigest d;
  d.scenario = j.at("scenario").get<std::string>();
  d.trial_count = j.at("trial_count").get<int>();
  d.pass_count = j.at("pass_count").get<int>();
  for (const auto& t : j.at("trials")) {
    if (!t.contains("error")) {
      d.margins.push_back(number_from_json(t.at("margin")));
    }
  }
  for (const auto& s : j.at("failing_seeds")) {
    d.failing_seeds.push_back(s.get<std::uint64_t>());
  }
  return d;
}

std::string trials_csv(const ExperimentReport& report) {
  std::string out = "trial,seed,scenario,pass,margin,witness\n";
  const std::string scen = scenario_name(report.config.scenario);
  const auto row = [&](const TrialRecord& t) {
    out += std::to_string(t.trial) + "," + std::to_string(t.seed) + "," +
           scen + "," + (t.pass ? "1" : "0") + "," + fmt(t.margin) + "," +
           t.witness + "\n";
  };
  for (const auto& t : report.trials) row(t);
  if (report.control) row(*report.control);
  return out;
}

std::string witness_csv(const ChartedMap& g,
                        const std::vector<CrossingCheck>& checks) {
  std::string out = "tuple,chart,params,image,margin\n";
  const auto join = [](const Eigen::VectorXd& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (i) s += "|";
      s += fmt(v(i));
    }
    return s;
  };
  for (size_t k = 0; k < checks.size(); ++k) {
    const auto& check = checks[k];
    for (int i = 0; i < check.point.s(); ++i) {
      const int chart = check.point.charts[i];
      const Eigen::VectorXd image =
          g.maps[chart].evaluate(check.point.params[i]);
      out += std::to_string(k) + "," + std::to_string(chart) + "," +
             join(check.point.params[i]) + "," + join(image) + "," +
             fmt(check.verdict.margin) + "\n";
    }
  }
  return out;
}

ordered_json aggregate_to_json(const AggregateSummary& s) {
  return {{"scenario", s.scenario},
          {"report_count", s.report_count},
          {"trial_count", s.trial_count},
          {"pass_count", s.pass_count},
          {"pooled_rate", json_number(s.pooled_rate)},
          {"wilson_low", json_number(s.wilson_low)},
          {"wilson_high", json_number(s.wilson_high)},
          {"margin_min", json_number(s.margin_min)},
          {"margin_median", json_number(s.margin_median)},
          {"failing_seeds", s.failing_seeds}};
}

}  // namespace plab
