#include "perturblab/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "perturblab/report_io.hpp"

namespace plab {
namespace {

namespace fs = std::filesystem;

Eigen::VectorXd parse_vector(const std::string& csv) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) values.push_back(std::stod(item));
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(
                                               values.size()));
}

Eigen::MatrixXd parse_matrix(const std::string& text) {
  const auto j = ordered_json::parse(text);
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  }
  return m;
}

void apply_override(ordered_json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("--set", "expected key=value, got '" + assignment + "'");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  ordered_json value;
  try {
    value = ordered_json::parse(raw);
  } catch (const nlohmann::json::exception&) {
    value = raw;  // plain string
  }
  ordered_json* node = &config;
  std::stringstream ss(path);
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(ss, key, '.')) keys.push_back(key);
  if (keys.empty()) throw ConfigError("--set", "empty key path");
  for (size_t i = 0; i + 1 < keys.size(); ++i) node = &(*node)[keys[i]];
  (*node)[keys.back()] = value;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::vector<std::string>& overrides, bool have_seed,
            std::uint64_t seed, int trials) {
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "config error: cannot open " << config_path << "\n";
    return 2;
  }
  ordered_json raw;
  try {
    raw = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  for (const auto& assignment : overrides) apply_override(raw, assignment);
  if (have_seed) raw["seed"] = seed;
  if (trials > 0) raw["trials"] = trials;

  ExperimentConfig config = config_from_json(raw);
  config.validate();  // before any computation starts

  const ExperimentReport report = run_experiment(config);

  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "report.json",
             report_to_json(report).dump(2) + "\n");
  write_file(fs::path(out_dir) / "trials.csv", trials_csv(report));
  ordered_json meta{{"schema", "perturblab-run-meta-v1"},
                    {"wall_seconds", report.wall_seconds}};
  write_file(fs::path(out_dir) / "run_meta.json", meta.dump(2) + "\n");

  std::cout << "scenario " << scenario_name(config.scenario) << ": "
            << report.pass_count << "/" << report.trial_count
            << " trials passed"
            << (report.threshold_met ? "" : " (below threshold)") << "\n";
  if (report.control) {
    std::cout << "control trial: " << (report.control->pass ? "pass" : "fail")
              << "\n";
  }
  return report.threshold_met ? 0 : 1;
}

SmoothMap map_by_name(const std::string& name, int n, int codomain,
                      const std::string& centers_json,
                      const std::string& coeffs_json) {
  if (name == "fold" || name == "definite_fold" ||
      name == "whitney_umbrella" || name == "inclusion") {
    return normal_form(normal_form_kind_from_name(name), n, codomain);
  }
  if (name == "circle" || name == "sphere2" || name == "nodal_cubic" ||
      name == "spiral" || name == "tangency_curve") {
    const int ambient = codomain > 0 ? codomain
                                     : (name == "sphere2" ? 3 : 2);
    return chart_atlas(manifold_kind_from_name(name), ambient)
        .charts.front()
        .map;
  }
  if (name == "distance_squared" || name == "lorentzian" || name == "gdsm") {
    if (centers_json.empty()) {
      throw ConfigError("--centers", "required for gdsm-family maps");
    }
    GdsmSpec spec;
    spec.centers = parse_matrix(centers_json);
    if (name == "distance_squared") {
      spec.coeffs = Eigen::MatrixXd::Ones(spec.centers.rows(),
                                          spec.centers.cols());
      spec.variant = GdsmVariant::distance_squared;
    } else if (name == "lorentzian") {
      spec.coeffs = Eigen::MatrixXd::Ones(spec.centers.rows(),
                                          spec.centers.cols());
      spec.coeffs.col(0).setConstant(-1.0);
      spec.variant = GdsmVariant::lorentzian;
    } else {
      if (coeffs_json.empty()) {
        throw ConfigError("--coeffs", "required for the general gdsm map");
      }
      spec.coeffs = parse_matrix(coeffs_json);
      spec.variant = GdsmVariant::general;
    }
    return make_gdsm(spec);
  }
  throw UnknownKind("unknown map: " + name);
}

int cmd_analyze_jet(const std::string& map_name, const std::string& point_csv,
                    int k, int codomain, double tol, double rank_tol,
                    const std::string& centers_json,
                    const std::string& coeffs_json) {
  const Eigen::VectorXd t = parse_vector(point_csv);
  const SmoothMap g = map_by_name(map_name, static_cast<int>(t.size()),
                                  codomain, centers_json, coeffs_json);
  const Jet1 jet = jet1(g, t);
  const int observed_corank = corank(jet.jac, rank_tol);
  const int stratum = k > 0 ? k : std::max(observed_corank, 1);
  const auto verdict = sigma_transversality(g, t, stratum, tol, rank_tol);

  ordered_json out;
  out["map"] = map_name;
  out["point"] = std::vector<double>(t.data(), t.data() + t.size());
  out["value"] = std::vector<double>(jet.value.data(),
                                     jet.value.data() + jet.value.size());
  ordered_json jac = ordered_json::array();
  for (int i = 0; i < jet.jac.rows(); ++i) {
    jac.push_back(std::vector<double>(jet.jac.row(i).data(),
                                      jet.jac.row(i).data() + jet.jac.cols()));
  }
  out["jacobian"] = std::move(jac);
  out["corank"] = observed_corank;
  out["k"] = stratum;
  out["verdict"] = verdict_to_json(verdict);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_sf(const std::string& manifold_name, int ambient, int density,
           long budget, std::uint64_t seed) {
  ChartedManifold n = chart_atlas(manifold_kind_from_name(manifold_name),
                                  ambient);
  SfEstimateOptions opt;
  opt.grid_per_axis = density;
  opt.random_tuples = budget;
  opt.seed = seed;
  const SfProfile profile = estimate_sf(n, opt);
  ordered_json out = sf_profile_to_json(profile);
  out["manifold"] = manifold_name;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_fibers(const std::string& map_name, const std::string& centers_json,
               const std::string& coeffs_json, const std::string& target_csv,
               double halfwidth, int density) {
  const SmoothMap f = map_by_name(map_name, 0, 0, centers_json, coeffs_json);
  const Eigen::VectorXd y = parse_vector(target_csv);
  Box box;
  box.lo = Eigen::VectorXd::Constant(f.domain_dim(), -halfwidth);
  box.hi = Eigen::VectorXd::Constant(f.domain_dim(), halfwidth);
  FiberOptions opt;
  opt.grid_per_axis = density;
  const int count = fiber_cardinality(f, y, box, opt);
  ordered_json out{{"map", map_name},
                   {"target", std::vector<double>(y.data(), y.data() + y.size())},
                   {"box_halfwidth", halfwidth},
                   {"count", count}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& files,
               const std::string& out_dir) {
  std::vector<ReportDigest> digests;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) {
      std::cerr << "config error: cannot open " << file << "\n";
      return 2;
    }
    digests.push_back(digest_from_json(ordered_json::parse(in)));
  }
  const AggregateSummary summary = aggregate(digests);
  const ordered_json out = aggregate_to_json(summary);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "summary.json", out.dump(2) + "\n");
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"desk-scale transversality experiments on linearly perturbed "
               "compositions"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run an experiment config");
  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  int trials = 0;
  run->add_option("--config", config_path, "experiment config (JSON)")
      ->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--set", overrides, "override config fields (key=value)");
  auto* seed_opt = run->add_option("--seed", seed, "override the seed");
  run->add_option("--trials", trials, "override the trial count");

  // analyze-jet
  auto* jet = app.add_subcommand("analyze-jet",
                                 "print the 1-jet and stratum verdict of a "
                                 "catalog map at a point");
  std::string map_name;
  std::string point_csv;
  std::string centers_json;
  std::string coeffs_json;
  int k = 0;
  int codomain = 0;
  double tol = 1e-6;
  double rank_tol = 1e-8;
  jet->add_option("--map", map_name, "catalog map name")->required();
  jet->add_option("--point", point_csv, "comma-separated coordinates")
      ->required();
  jet->add_option("--k", k, "stratum corank (default: observed corank)");
  jet->add_option("--codomain", codomain, "codomain dimension where needed");
  jet->add_option("--tol", tol, "transversality margin tolerance");
  jet->add_option("--rank-tol", rank_tol, "numerical rank tolerance");
  jet->add_option("--centers", centers_json, "gdsm centers (JSON rows)");
  jet->add_option("--coeffs", coeffs_json, "gdsm coefficients (JSON rows)");

  // sf
  auto* sf = app.add_subcommand("sf", "estimate the s_f profile of a catalog "
                                      "manifold");
  std::string manifold_name;
  int ambient = 0;
  int density = 0;
  long budget = 20000;
  std::uint64_t sf_seed = 0;
  sf->add_option("--manifold", manifold_name, "catalog manifold")->required();
  sf->add_option("--ambient", ambient, "ambient dimension");
  sf->add_option("--density", density, "grid points per axis");
  sf->add_option("--budget", budget, "random tuple budget");
  sf->add_option("--seed", sf_seed, "sampling seed");

  // fibers
  auto* fibers = app.add_subcommand("fibers",
                                    "count Newton solutions of f(x) = y");
  std::string fiber_map = "distance_squared";
  std::string fiber_centers;
  std::string fiber_coeffs;
  std::string target_csv;
  double halfwidth = 6.0;
  int fiber_density = 9;
  fibers->add_option("--map", fiber_map, "gdsm-family map name");
  fibers->add_option("--centers", fiber_centers, "centers (JSON rows)")
      ->required();
  fibers->add_option("--coeffs", fiber_coeffs, "coefficients (JSON rows)");
  fibers->add_option("--target", target_csv, "target point")->required();
  fibers->add_option("--halfwidth", halfwidth, "search box half-width");
  fibers->add_option("--density", fiber_density, "seed grid per axis");

  // report
  auto* rep = app.add_subcommand("report", "aggregate prior report.json files");
  std::vector<std::string> report_files;
  std::string report_out;
  rep->add_option("files", report_files, "report.json files")->required();
  rep->add_option("--out", report_out, "directory for summary.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) {
      return cmd_run(config_path, out_dir, overrides, seed_opt->count() > 0,
                     seed, trials);
    }
    if (jet->parsed()) {
      return cmd_analyze_jet(map_name, point_csv, k, codomain, tol, rank_tol,
                             centers_json, coeffs_json);
    }
    if (sf->parsed()) {
      const ManifoldKind kind = manifold_kind_from_name(manifold_name);
      const int amb = ambient > 0 ? ambient
                                  : (kind == ManifoldKind::sphere2 ? 3 : 2);
      return cmd_sf(manifold_name, amb, density, budget, sf_seed);
    }
    if (fibers->parsed()) {
      return cmd_fibers(fiber_map, fiber_centers, fiber_coeffs, target_csv,
                        halfwidth, fiber_density);
    }
    if (rep->parsed()) return cmd_report(report_files, report_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const MixedScenario& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const UnknownKind& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace plab
