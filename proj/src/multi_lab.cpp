#include "perturblab/multi_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "perturblab/rng.hpp"

namespace plab {

bool points_distinct(const ChartedManifold& n, int chart_a,
                     const Eigen::VectorXd& param_a, int chart_b,
                     const Eigen::VectorXd& param_b,
                     const DistinctnessOptions& opt) {
  if (n.declared_injective) {
    const Eigen::VectorXd ia = n.charts[chart_a].map.evaluate(param_a);
    const Eigen::VectorXd ib = n.charts[chart_b].map.evaluate(param_b);
    return (ia - ib).norm() > opt.image_tol;
  }
  if (chart_a == chart_b) return (param_a - param_b).norm() > opt.param_tol;
  // Distinct charts of a non-injective presentation: decidable only through
  // images; equal images are treated as the same point (conservative).
  const Eigen::VectorXd ia = n.charts[chart_a].map.evaluate(param_a);
  const Eigen::VectorXd ib = n.charts[chart_b].map.evaluate(param_b);
  return (ia - ib).norm() > opt.image_tol;
}

bool multipoint_distinct(const ChartedManifold& n, const MultiPoint& mp,
                         const DistinctnessOptions& opt) {
  for (int i = 0; i < mp.s(); ++i) {
    for (int j = i + 1; j < mp.s(); ++j) {
      if (!points_distinct(n, mp.charts[i], mp.params[i], mp.charts[j],
                           mp.params[j], opt)) {
        return false;
      }
    }
  }
  return true;
}

TransversalityVerdict delta_transversality(const ChartedMap& g,
                                           const MultiPoint& mp,
                                           double coincide_tol,
                                           double rank_tol,
                                           const DistinctnessOptions& d) {
  const int s = mp.s();
  if (s < 2) throw TooFewPoints("diagonal check needs at least two points");
  if (static_cast<int>(mp.charts.size()) != s) {
    throw DimensionMismatch("multi-point charts/params sizes differ");
  }
  if (!multipoint_distinct(g.manifold, mp, d)) {
    throw DegenerateTuple("multi-point entries are not pairwise distinct");
  }

  const int n = g.manifold.intrinsic_dim;
  const int l = g.codomain_dim;
  std::vector<Eigen::VectorXd> values(s);
  std::vector<Eigen::MatrixXd> jacs(s);
  for (int i = 0; i < s; ++i) {
    auto jet = g.maps[mp.charts[i]].eval_jet2(mp.params[i]);
    values[i] = std::move(jet.value);
    jacs[i] = std::move(jet.jac);
  }

  double gap = 0.0;
  for (int i = 0; i < s; ++i) {
    for (int j = i + 1; j < s; ++j) {
      gap = std::max(gap, (values[i] - values[j]).norm());
    }
  }

  Eigen::MatrixXd stacked = Eigen::MatrixXd::Zero(l * (s - 1), n * s);
  for (int i = 1; i < s; ++i) {
    stacked.block((i - 1) * l, 0, l, n) = jacs[0];
    stacked.block((i - 1) * l, i * n, l, n) = -jacs[i];
  }

  TransversalityVerdict verdict;
  verdict.codim = l * (s - 1);
  verdict.on_stratum = gap < coincide_tol;
  const int rank = numerical_rank(stacked, rank_tol);
  verdict.corank = verdict.codim - rank;
  verdict.margin = verdict.codim <= n * s
                       ? kth_singular_value(stacked, verdict.codim)
                       : 0.0;
  verdict.transverse = !verdict.on_stratum || rank == verdict.codim;
  return verdict;
}

// ---------------------------------------------------------------------------
// Multiple point search
// ---------------------------------------------------------------------------

namespace {

struct EvaluatedGrid {
  std::vector<GridPoint> points;        // manifold grid
  std::vector<Eigen::VectorXd> values;  // composite images
};

EvaluatedGrid evaluate_grid(const ChartedMap& g, int per_axis) {
  EvaluatedGrid eg;
  eg.points = g.manifold.sample_grid(per_axis);
  eg.values.reserve(eg.points.size());
  for (const auto& gp : eg.points) {
    eg.values.push_back(g.maps[gp.chart].evaluate(gp.param));
  }
  return eg;
}

double tuple_gap(const std::vector<Eigen::VectorXd>& values) {
  double gap = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    for (size_t j = i + 1; j < values.size(); ++j) {
      gap = std::max(gap, (values[i] - values[j]).norm());
    }
  }
  return gap;
}

/// Gauss-Newton with Levenberg damping on the stacked image differences.
/// Returns the final maximum pairwise image gap.
double refine_tuple(const ChartedMap& g, MultiPoint& mp,
                    const MultiSearchOptions& opt) {
  const int s = mp.s();
  const int n = g.manifold.intrinsic_dim;
  const int l = g.codomain_dim;

  std::vector<Eigen::VectorXd> values(s);
  std::vector<Eigen::MatrixXd> jacs(s);
  const auto evaluate = [&](const MultiPoint& p) {
    for (int i = 0; i < s; ++i) {
      auto jet = g.maps[p.charts[i]].eval_jet2(p.params[i]);
      values[i] = std::move(jet.value);
      jacs[i] = std::move(jet.jac);
    }
  };
  const auto residual = [&](Eigen::VectorXd& r, Eigen::MatrixXd& jr) {
    r.resize(l * (s - 1));
    jr = Eigen::MatrixXd::Zero(l * (s - 1), n * s);
    for (int i = 1; i < s; ++i) {
      r.segment((i - 1) * l, l) = values[0] - values[i];
      jr.block((i - 1) * l, 0, l, n) = jacs[0];
      jr.block((i - 1) * l, i * n, l, n) = -jacs[i];
    }
  };

  evaluate(mp);
  Eigen::VectorXd r;
  Eigen::MatrixXd jr;
  residual(r, jr);
  double rnorm = r.norm();
  double lambda = 1e-3;
  for (int iter = 0; iter < opt.max_iterations && rnorm > 0.0; ++iter) {
    bool stepped = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      const Eigen::MatrixXd h =
          jr.transpose() * jr +
          lambda * Eigen::MatrixXd::Identity(n * s, n * s);
      const Eigen::VectorXd delta = h.ldlt().solve(-jr.transpose() * r);
      MultiPoint next = mp;
      double step = 0.0;
      for (int i = 0; i < s; ++i) {
        const Eigen::VectorXd moved =
            g.manifold.charts[next.charts[i]].box.clamp_interior(
                next.params[i] + delta.segment(i * n, n), 1e-4);
        step = std::max(step, (moved - next.params[i]).norm());
        next.params[i] = moved;
      }
      std::vector<Eigen::VectorXd> saved_values = values;
      std::vector<Eigen::MatrixXd> saved_jacs = jacs;
      evaluate(next);
      Eigen::VectorXd next_r;
      Eigen::MatrixXd next_jr;
      residual(next_r, next_jr);
      if (next_r.norm() < rnorm) {
        mp = next;
        r = next_r;
        jr = next_jr;
        rnorm = r.norm();
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        if (step < opt.newton_tol) iter = opt.max_iterations;
        break;
      }
      values = std::move(saved_values);
      jacs = std::move(saved_jacs);
      lambda *= 10.0;
    }
    if (!stepped) break;
  }
  evaluate(mp);
  return tuple_gap(values);
}

/// Canonical within-tuple order so permuted copies of one geometric tuple
/// cluster together.
void canonicalize(MultiPoint& mp) {
  std::vector<int> order(mp.s());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (mp.charts[a] != mp.charts[b]) return mp.charts[a] < mp.charts[b];
    return std::lexicographical_compare(
        mp.params[a].data(), mp.params[a].data() + mp.params[a].size(),
        mp.params[b].data(), mp.params[b].data() + mp.params[b].size());
  });
  MultiPoint sorted;
  for (int i : order) {
    sorted.charts.push_back(mp.charts[i]);
    sorted.params.push_back(mp.params[i]);
  }
  mp = std::move(sorted);
}

double tuple_distance(const MultiPoint& a, const MultiPoint& b) {
  if (a.charts != b.charts) return std::numeric_limits<double>::infinity();
  double d = 0.0;
  for (int i = 0; i < a.s(); ++i) {
    d = std::max(d, (a.params[i] - b.params[i]).norm());
  }
  return d;
}

}  // namespace

MultiPointSearch find_multiple_points(const ChartedMap& g, int s,
                                      const MultiSearchOptions& opt) {
  if (s < 2) throw TooFewPoints("multiple point search needs s >= 2");
  const auto eg = evaluate_grid(g, opt.grid_per_axis);
  const int count = static_cast<int>(eg.points.size());

  MultiPointSearch out;
  out.min_gap_seen = std::numeric_limits<double>::infinity();

  // Same rule as points_distinct, on the precomputed grid images.
  const auto grid_distinct = [&](int i, int j) {
    if (!g.manifold.declared_injective &&
        eg.points[i].chart == eg.points[j].chart) {
      return (eg.points[i].param - eg.points[j].param).norm() >
             opt.distinct.param_tol;
    }
    return (eg.points[i].image - eg.points[j].image).norm() >
           opt.distinct.image_tol;
  };

  // Candidate pairs below the seeding gap, nearest first.
  std::vector<std::pair<double, std::pair<int, int>>> pairs;
  for (int i = 0; i < count; ++i) {
    for (int j = i + 1; j < count; ++j) {
      if (!grid_distinct(i, j)) continue;
      const double gap = (eg.values[i] - eg.values[j]).norm();
      out.min_gap_seen = std::min(out.min_gap_seen, gap);
      if (gap < opt.seed_gap) pairs.push_back({gap, {i, j}});
    }
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  // Extend pairs to s-tuples of mutually distinct grid points whose images
  // stay within the seeding gap.
  std::vector<std::vector<int>> seeds;
  for (const auto& [gap, ij] : pairs) {
    std::vector<std::vector<int>> partial = {{ij.first, ij.second}};
    for (int extend = 2; extend < s; ++extend) {
      std::vector<std::vector<int>> next;
      for (const auto& tuple : partial) {
        for (int k = tuple.back() + 1; k < count; ++k) {
          bool ok = true;
          for (int idx : tuple) {
            if ((eg.values[idx] - eg.values[k]).norm() >= opt.seed_gap ||
                !grid_distinct(idx, k)) {
              ok = false;
              break;
            }
          }
          if (ok) next.push_back([&] {
            auto t = tuple;
            t.push_back(k);
            return t;
          }());
          if (static_cast<int>(next.size()) > 4 * opt.max_seeds) break;
        }
      }
      partial = std::move(next);
    }
    for (auto& t : partial) seeds.push_back(std::move(t));
    if (static_cast<int>(seeds.size()) >= 4 * opt.max_seeds) break;
  }
  out.budget_exhausted = static_cast<int>(seeds.size()) > opt.max_seeds;
  if (out.budget_exhausted) seeds.resize(opt.max_seeds);
  out.seeds_tried = static_cast<int>(seeds.size());

  for (const auto& seed : seeds) {
    MultiPoint mp;
    for (int idx : seed) {
      mp.charts.push_back(eg.points[idx].chart);
      mp.params.push_back(eg.points[idx].param);
    }
    const double gap = refine_tuple(g, mp, opt);
    if (!multipoint_distinct(g.manifold, mp, opt.distinct)) continue;
    out.min_gap_seen = std::min(out.min_gap_seen, gap);
    if (gap >= opt.coincide_tol) continue;
    canonicalize(mp);
    bool duplicate = false;
    for (const auto& known : out.points) {
      if (tuple_distance(known.point, mp) < opt.cluster_radius) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) out.points.push_back({std::move(mp), gap});
  }
  return out;
}

NormalCrossingsReport normal_crossings_verdict(const ChartedMap& g, int s_max,
                                               const MultiSearchOptions& opt,
                                               double rank_tol) {
  if (s_max < 2) throw TooFewPoints("normal crossings needs s_max >= 2");
  NormalCrossingsReport report;
  report.is_normal_crossings_at_found_points = true;
  report.min_margin = std::numeric_limits<double>::infinity();
  for (int s = 2; s <= s_max; ++s) {
    auto search = find_multiple_points(g, s, opt);
    report.budget_exhausted |= search.budget_exhausted;
    for (auto& found : search.points) {
      CrossingCheck check;
      check.image_gap = found.image_gap;
      check.verdict = delta_transversality(g, found.point, opt.coincide_tol,
                                           rank_tol, opt.distinct);
      check.point = std::move(found.point);
      if (check.verdict.on_stratum) {
        report.min_margin = std::min(report.min_margin, check.verdict.margin);
        report.is_normal_crossings_at_found_points &= check.verdict.transverse;
      }
      report.checks.push_back(std::move(check));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// The s_f invariant
// ---------------------------------------------------------------------------

namespace {

/// Margin of affine independence: the (size-1)-th singular value of the
/// difference matrix, 0 when the subset is dependent.
double subset_margin(const std::vector<Eigen::VectorXd>& cloud,
                     const std::vector<int>& subset) {
  Eigen::MatrixXd d(subset.size() - 1, cloud[subset[0]].size());
  for (size_t i = 1; i < subset.size(); ++i) {
    d.row(static_cast<Eigen::Index>(i - 1)) =
        (cloud[subset[i]] - cloud[subset[0]]).transpose();
  }
  return kth_singular_value(d, static_cast<int>(subset.size()) - 1);
}

bool subset_independent(const std::vector<Eigen::VectorXd>& cloud,
                        const std::vector<int>& subset, double rank_tol,
                        double* margin_out = nullptr) {
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(subset.size());
  for (int idx : subset) pts.push_back(cloud[idx]);
  const int rank = affine_rank(pts, rank_tol);
  if (margin_out) *margin_out = subset_margin(cloud, subset);
  return rank == static_cast<int>(subset.size()) - 1;
}

}  // namespace

SfProfile compute_sf(const std::vector<Eigen::VectorXd>& cloud,
                     double rank_tol) {
  if (cloud.size() < 2) throw TooFewPoints("s_f needs at least two points");
  const int m = static_cast<int>(cloud[0].size());
  const int count = static_cast<int>(cloud.size());

  SfProfile profile;
  profile.ambient_dim = m;
  profile.cloud_size = count;
  profile.exhaustive = true;

  // Size-2 witness: any pair of distinct points.
  {
    double margin = 0.0;
    subset_independent(cloud, {0, 1}, rank_tol, &margin);
    profile.witnesses.push_back({{0, 1}, margin});
  }

  const int cap = std::min(m + 1, count);
  int s_f = cap;
  const int max_size = std::min(m + 2, count);
  for (int size = 3; size <= max_size && !profile.dependent_tuple; ++size) {
    bool recorded_witness = false;
    for (const auto& subset : k_subsets(count, size)) {
      ++profile.tuples_checked;
      double margin = 0.0;
      if (!subset_independent(cloud, subset, rank_tol, &margin)) {
        profile.dependent_tuple = SfWitness{subset, margin};
        s_f = std::min(s_f, size - 1);
        break;
      }
      if (!recorded_witness) {
        profile.witnesses.push_back({subset, margin});
        recorded_witness = true;
      }
    }
  }
  profile.s_f = s_f;
  while (static_cast<int>(profile.witnesses.size()) > profile.s_f - 1) {
    profile.witnesses.pop_back();
  }
  profile.bound_ok = profile.s_f >= 2 && profile.s_f <= m + 1;
  return profile;
}

SfProfile estimate_sf(const ChartedManifold& n, const SfEstimateOptions& opt) {
  const int density = opt.grid_per_axis > 0 ? opt.grid_per_axis
                                            : n.sample_density;
  const auto raw = n.sample_grid(density);
  if (raw.size() < 2) throw TooFewPoints("s_f estimate needs grid samples");

  // Deduplicate coincident images; s_f only sees the image point set.
  std::vector<Eigen::VectorXd> cloud;
  std::vector<int> raw_to_cloud(raw.size(), -1);
  for (size_t i = 0; i < raw.size(); ++i) {
    int found = -1;
    for (size_t c = 0; c < cloud.size(); ++c) {
      if ((cloud[c] - raw[i].image).norm() < opt.dedupe_radius) {
        found = static_cast<int>(c);
        break;
      }
    }
    if (found < 0) {
      cloud.push_back(raw[i].image);
      found = static_cast<int>(cloud.size()) - 1;
    }
    raw_to_cloud[i] = found;
  }

  if (static_cast<int>(cloud.size()) <= opt.subcloud_size) {
    return compute_sf(cloud, opt.rank_tol);
  }

  const int m = n.ambient_dim;
  SfProfile profile;
  profile.ambient_dim = m;
  profile.cloud_size = static_cast<int>(cloud.size());
  profile.exhaustive = false;

  const int tuple_cap = opt.max_tuple_size > 0
                            ? opt.max_tuple_size
                            : std::min(m + 2, opt.subcloud_size);
  int min_dependent_size = m + 2;  // any m+2 points are affinely dependent

  const auto scan_subcloud = [&](const std::vector<int>& subcloud) {
    const int sz = static_cast<int>(subcloud.size());
    const int top = std::min({tuple_cap, sz, min_dependent_size});
    for (int size = 3; size <= top; ++size) {
      for (const auto& rel : k_subsets(sz, size)) {
        ++profile.tuples_checked;
        std::vector<int> subset;
        subset.reserve(rel.size());
        for (int r : rel) subset.push_back(subcloud[r]);
        double margin = 0.0;
        if (!subset_independent(cloud, subset, opt.rank_tol, &margin)) {
          if (size < min_dependent_size) {
            min_dependent_size = size;
            profile.dependent_tuple = SfWitness{subset, margin};
          }
          return;
        }
      }
    }
  };

  // Windows along grid lines: consecutive samples of one chart axis. Curves
  // inside the manifold (grid rows of a sphere chart, arcs of a circle) land
  // here and expose low-dimensional tuples that random draws would miss.
  size_t raw_offset = 0;
  for (const auto& chart : n.charts) {
    const int d = density;
    const int nd = chart.box.dim();
    long chart_total = 1;
    for (int i = 0; i < nd; ++i) chart_total *= d;
    for (int axis = 0; axis < nd; ++axis) {
      long stride = 1;
      for (int i = 0; i < axis; ++i) stride *= d;
      for (long base = 0; base < chart_total; ++base) {
        if ((base / stride) % d != 0) continue;  // line starts only
        std::vector<int> line;
        for (int step = 0; step < d; ++step) {
          line.push_back(
              raw_to_cloud[raw_offset + base + step * stride]);
        }
        std::sort(line.begin(), line.end());
        line.erase(std::unique(line.begin(), line.end()), line.end());
        for (size_t start = 0; start + 3 <= line.size();
             start += opt.subcloud_size) {
          const size_t stop =
              std::min(start + opt.subcloud_size, line.size());
          scan_subcloud(std::vector<int>(line.begin() + start,
                                         line.begin() + stop));
        }
      }
    }
    raw_offset += static_cast<size_t>(chart_total);
  }

  // Randomized tuple sampling across the whole cloud, one budget for all
  // tuple sizes.
  Rng rng(opt.seed ^ 0x5f9d1a2bULL);
  const int cloud_count = static_cast<int>(cloud.size());
  for (long draw = 0; draw < opt.random_tuples; ++draw) {
    const int size =
        3 + static_cast<int>(rng.index(static_cast<std::uint64_t>(
                std::max(1, std::min(tuple_cap, min_dependent_size) - 2))));
    std::vector<int> subset;
    while (static_cast<int>(subset.size()) < size) {
      const int pick = static_cast<int>(rng.index(cloud_count));
      if (std::find(subset.begin(), subset.end(), pick) == subset.end()) {
        subset.push_back(pick);
      }
    }
    std::sort(subset.begin(), subset.end());
    ++profile.tuples_checked;
    double margin = 0.0;
    if (!subset_independent(cloud, subset, opt.rank_tol, &margin) &&
        size < min_dependent_size) {
      min_dependent_size = size;
      profile.dependent_tuple = SfWitness{subset, margin};
    }
  }

  profile.s_f = std::min(min_dependent_size - 1, m + 1);

  // Witnesses: independent tuples of each size up to s_f, taken greedily.
  {
    double margin = 0.0;
    subset_independent(cloud, {0, 1}, opt.rank_tol, &margin);
    profile.witnesses.push_back({{0, 1}, margin});
    Rng wrng(opt.seed ^ 0x77aa11ULL);
    for (int size = 3; size <= profile.s_f; ++size) {
      for (int attempt = 0; attempt < 200; ++attempt) {
        std::vector<int> subset;
        while (static_cast<int>(subset.size()) < size) {
          const int pick = static_cast<int>(wrng.index(cloud_count));
          if (std::find(subset.begin(), subset.end(), pick) == subset.end()) {
            subset.push_back(pick);
          }
        }
        std::sort(subset.begin(), subset.end());
        if (subset_independent(cloud, subset, opt.rank_tol, &margin)) {
          profile.witnesses.push_back({subset, margin});
          break;
        }
      }
    }
  }
  profile.bound_ok = profile.s_f >= 2 && profile.s_f <= m + 1;
  return profile;
}

// ---------------------------------------------------------------------------
// Injectivity and fibers
// ---------------------------------------------------------------------------

InjectivityReport injectivity_check(const ChartedMap& g,
                                    const MultiSearchOptions& opt) {
  auto search = find_multiple_points(g, 2, opt);
  InjectivityReport report;
  report.budget_exhausted = search.budget_exhausted;
  report.min_image_gap = search.min_gap_seen;
  report.is_injective_at_resolution = search.points.empty();
  if (!search.points.empty()) {
    report.witness = search.points.front().point;
    report.min_image_gap =
        std::min(report.min_image_gap, search.points.front().image_gap);
  }
  return report;
}

int fiber_cardinality(const SmoothMap& f, const Eigen::VectorXd& y,
                      const Box& box, const FiberOptions& opt) {
  if (y.size() != f.codomain_dim()) {
    throw DimensionMismatch("target dimension does not match the map");
  }
  if (box.dim() != f.domain_dim()) {
    throw DimensionMismatch("box dimension does not match the map");
  }
  const int m = f.domain_dim();
  std::vector<Eigen::VectorXd> solutions;
  for (const auto& seed : box.grid(opt.grid_per_axis)) {
    Eigen::VectorXd x = seed;
    auto jet = f.eval_jet2(x);
    Eigen::VectorXd res = jet.value - y;
    double rnorm = res.norm();
    double lambda = 1e-3;
    for (int iter = 0; iter < opt.max_iterations; ++iter) {
      if (res.lpNorm<Eigen::Infinity>() < opt.residual_tol) break;
      bool stepped = false;
      for (int attempt = 0; attempt < 8; ++attempt) {
        const Eigen::MatrixXd h =
            jet.jac.transpose() * jet.jac +
            lambda * Eigen::MatrixXd::Identity(m, m);
        const Eigen::VectorXd delta =
            h.ldlt().solve(-jet.jac.transpose() * res);
        const Eigen::VectorXd next = x + delta;
        if (!f.in_domain(next)) {
          lambda *= 10.0;
          continue;
        }
        const auto next_jet = f.eval_jet2(next);
        const Eigen::VectorXd next_res = next_jet.value - y;
        if (next_res.norm() < rnorm) {
          const double step = delta.norm();
          x = next;
          jet = next_jet;
          res = next_res;
          rnorm = next_res.norm();
          lambda = std::max(lambda / 3.0, 1e-12);
          stepped = true;
          if (step < opt.newton_tol) iter = opt.max_iterations;
          break;
        }
        lambda *= 10.0;
      }
      if (!stepped) break;
    }
    if (res.lpNorm<Eigen::Infinity>() >= opt.residual_tol) continue;
    bool duplicate = false;
    for (const auto& sol : solutions) {
      if ((sol - x).norm() < opt.cluster_radius) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) solutions.push_back(x);
  }
  return static_cast<int>(solutions.size());
}

// ---------------------------------------------------------------------------
// Multi-point rank certificate
// ---------------------------------------------------------------------------

M2Result build_m2(const std::vector<Eigen::VectorXd>& chart_values,
                  const LinearPerturbation& alpha, double rank_tol) {
  const int s = static_cast<int>(chart_values.size());
  if (s < 2) throw TooFewPoints("the certificate needs s >= 2 points");
  const int l = alpha.rows();
  const int m = alpha.cols();
  double scale = 1.0;
  for (const auto& p : chart_values) {
    if (p.size() != m) {
      throw DimensionMismatch("chart value dimension does not match alpha");
    }
    scale = std::max(scale, p.lpNorm<Eigen::Infinity>());
  }
  for (int i = 0; i < s; ++i) {
    for (int j = i + 1; j < s; ++j) {
      if ((chart_values[i] - chart_values[j]).norm() < 1e-12 * scale) {
        throw DegenerateTuple("coincident points in the tuple");
      }
    }
  }

  M2Result res;
  res.expected_rank = l * s;
  res.matrix = Eigen::MatrixXd::Zero(l * s, l + m * l);
  for (int i = 0; i < s; ++i) {
    res.matrix.block(i * l, 0, l, l).setIdentity();
    for (int k = 0; k < l; ++k) {
      res.matrix.block(i * l + k, l + k * m, 1, m) =
          chart_values[i].transpose();
    }
  }
  res.reduced = res.matrix;
  for (int i = 1; i < s; ++i) {
    res.reduced.middleRows(i * l, l) -= res.reduced.topRows(l);
  }
  res.rank = numerical_rank(res.matrix, rank_tol);
  res.reduced_rank = numerical_rank(res.reduced, rank_tol);

  Eigen::MatrixXd diffs(s - 1, m);
  for (int i = 1; i < s; ++i) {
    diffs.row(i - 1) = (chart_values[i] - chart_values[0]).transpose();
  }
  res.difference_rank = numerical_rank(diffs, rank_tol);
  res.differences_independent = res.difference_rank == s - 1;
  return res;
}

}  // namespace plab
