#include "perturblab/jet_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace plab {

Dimensions::Dimensions(int n_, int l_) : n(n_), l(l_) {
  if (n < 1 || l < 1) {
    throw BadDimension("dimensions must be positive, got (" +
                       std::to_string(n) + ", " + std::to_string(l) + ")");
  }
}

Jet1 jet1(const SmoothMap& g, const Eigen::VectorXd& t) {
  Jet1 j;
  auto jet = g.eval_jet2(t);
  j.base = t;
  j.value = std::move(jet.value);
  j.jac = std::move(jet.jac);
  return j;
}

int corank(const Eigen::MatrixXd& jac, double tol) {
  const int v = static_cast<int>(std::min(jac.rows(), jac.cols()));
  return v - numerical_rank(jac, tol);
}

int sigma_codim(const Dimensions& dims, int k) {
  if (k < 1 || k > dims.v()) {
    throw BadK("stratum index k must satisfy 1 <= k <= min(n,l), got " +
               std::to_string(k));
  }
  return (dims.n - dims.v() + k) * (dims.l - dims.v() + k);
}

int max_corank_k0(const Dimensions& dims) {
  // (n - v + k)(l - v + k) grows with k and vanishes at k = 0.
  int k = 0;
  while ((dims.n - dims.v() + k + 1) * (dims.l - dims.v() + k + 1) <= dims.n) {
    ++k;
  }
  return k;
}

namespace {

/// Margin for "rows of a z x n map span R^z": the z-th singular value, zero
/// when z exceeds n. An empty normal space is vacuously covered.
double surjectivity_margin(const Eigen::MatrixXd& normal_map) {
  const int z = static_cast<int>(normal_map.rows());
  if (z == 0) return std::numeric_limits<double>::infinity();
  if (z > normal_map.cols()) return 0.0;
  return kth_singular_value(normal_map, z);
}

/// Flattened map u -> U2^T (D_u J) V2 as a ((l-r)(n-r)) x n matrix, from the
/// exact Hessian tensor.
Eigen::MatrixXd corank_normal_map(const SmoothMap::Jet2& jet,
                                  const Eigen::MatrixXd& u2,
                                  const Eigen::MatrixXd& v2) {
  const int n = static_cast<int>(jet.jac.cols());
  const int rows_u = static_cast<int>(u2.cols());
  const int cols_v = static_cast<int>(v2.cols());
  Eigen::MatrixXd flat(rows_u * cols_v, n);
  const int l = static_cast<int>(jet.jac.rows());
  for (int a = 0; a < n; ++a) {
    Eigen::MatrixXd dj(l, n);
    for (int i = 0; i < l; ++i) dj.row(i) = jet.hess[i].row(a);
    Eigen::MatrixXd block = u2.transpose() * dj * v2;
    flat.col(a) =
        Eigen::Map<Eigen::VectorXd>(block.data(), block.size());
  }
  return flat;
}

}  // namespace

TransversalityVerdict sigma_transversality(const SmoothMap& g,
                                           const Eigen::VectorXd& t, int k,
                                           double tol, double rank_tol) {
  const Dimensions dims(g.domain_dim(), g.codomain_dim());
  if (k < 1 || k > dims.v()) {
    throw BadK("stratum index k out of range: " + std::to_string(k));
  }
  const auto jet = g.eval_jet2(t);
  const auto svd = full_svd(jet.jac);
  const int r = numerical_rank(svd.singular_values, rank_tol);

  TransversalityVerdict verdict;
  verdict.corank = dims.v() - r;
  verdict.on_stratum = (verdict.corank == k);
  verdict.codim = sigma_codim(dims, k);
  const Eigen::MatrixXd u2 = svd.u.rightCols(dims.l - r);
  const Eigen::MatrixXd v2 = svd.v.rightCols(dims.n - r);
  verdict.margin = surjectivity_margin(corank_normal_map(jet, u2, v2));
  verdict.transverse = !verdict.on_stratum || verdict.margin > tol;
  return verdict;
}

TransversalityVerdict fiber_transversality(const SmoothMap& g,
                                           const Eigen::VectorXd& t,
                                           const InvariantFiber& fiber,
                                           double tol, double rank_tol) {
  const auto jet = g.eval_jet2(t);
  TransversalityVerdict verdict;
  verdict.corank = corank(jet.jac, rank_tol);
  verdict.on_stratum = fiber.contains(jet.jac);
  verdict.codim = fiber.codim;
  verdict.margin = surjectivity_margin(fiber.normal_map(g, t));
  verdict.transverse = !verdict.on_stratum || verdict.margin > tol;
  return verdict;
}

MorseClass morse_verdict(const SmoothMap& g, const Eigen::VectorXd& t,
                         double tol) {
  if (g.codomain_dim() != 1) {
    throw BadDimension("morse verdict requires a scalar map");
  }
  const auto jet = g.eval_jet2(t);
  if (jet.jac.row(0).norm() > tol) return MorseClass::regular;
  return std::abs(jet.hess[0].determinant()) > tol
             ? MorseClass::nondegenerate_critical
             : MorseClass::degenerate_critical;
}

bool whitney_umbrella_verdict(const SmoothMap& g, const Eigen::VectorXd& t,
                              double tol, double rank_tol) {
  const int n = g.domain_dim();
  const int l = g.codomain_dim();
  if (n < 2 || l != 2 * n - 1) {
    throw BadDimensionPair("whitney umbrella verdict needs l = 2n-1, n >= 2; "
                           "got (" + std::to_string(n) + ", " +
                           std::to_string(l) + ")");
  }
  const auto verdict = sigma_transversality(g, t, 1, tol, rank_tol);
  return verdict.on_stratum && verdict.transverse;
}

ImmersionReport immersion_check(const SmoothMap& g,
                                const std::vector<Eigen::VectorXd>& samples,
                                double tol) {
  if (samples.empty()) throw TooFewPoints("immersion check needs samples");
  ImmersionReport report;
  report.min_singular_value = std::numeric_limits<double>::infinity();
  const int n = g.domain_dim();
  for (const auto& t : samples) {
    const double sv = kth_singular_value(g.jacobian(t), n);
    if (sv < report.min_singular_value) {
      report.min_singular_value = sv;
      report.witness = t;
    }
  }
  report.is_immersion_at_samples = report.min_singular_value > tol;
  return report;
}

ImmersionReport immersion_check(const ChartedMap& g, int points_per_axis,
                                double tol) {
  ImmersionReport report;
  report.min_singular_value = std::numeric_limits<double>::infinity();
  const int n = g.manifold.intrinsic_dim;
  for (size_t c = 0; c < g.maps.size(); ++c) {
    for (const auto& t : g.manifold.charts[c].box.grid(
             points_per_axis > 0 ? points_per_axis
                                 : g.manifold.sample_density)) {
      const double sv = kth_singular_value(g.maps[c].jacobian(t), n);
      if (sv < report.min_singular_value) {
        report.min_singular_value = sv;
        report.witness = t;
        report.witness_chart = static_cast<int>(c);
      }
    }
  }
  report.is_immersion_at_samples = report.min_singular_value > tol;
  return report;
}

namespace {

CorankBoundReport corank_bound_impl(
    const Dimensions& dims,
    const std::function<void(const std::function<void(
        int, const Eigen::VectorXd&, const Eigen::MatrixXd&)>&)>& for_each_jac,
    double rank_tol) {
  CorankBoundReport report;
  report.k0 = max_corank_k0(dims);
  report.margin = std::numeric_limits<double>::infinity();
  const int needed_rank = dims.v() - std::min(report.k0, dims.v());
  for_each_jac([&](int chart, const Eigen::VectorXd& t,
                   const Eigen::MatrixXd& jac) {
    const int c = corank(jac, rank_tol);
    if (c > report.max_corank_observed) {
      report.max_corank_observed = c;
      report.witness = t;
      report.witness_chart = chart;
    }
    if (needed_rank >= 1) {
      report.margin =
          std::min(report.margin, kth_singular_value(jac, needed_rank));
    }
  });
  report.respects_bound = report.max_corank_observed <= report.k0;
  return report;
}

}  // namespace

CorankBoundReport corank_bound_check(const SmoothMap& g,
                                     const std::vector<Eigen::VectorXd>& samples,
                                     double rank_tol) {
  if (samples.empty()) throw TooFewPoints("corank bound check needs samples");
  const Dimensions dims(g.domain_dim(), g.codomain_dim());
  return corank_bound_impl(
      dims,
      [&](const auto& visit) {
        for (const auto& t : samples) visit(0, t, g.jacobian(t));
      },
      rank_tol);
}

CorankBoundReport corank_bound_check(const ChartedMap& g, int points_per_axis,
                                     double rank_tol) {
  const Dimensions dims(g.manifold.intrinsic_dim, g.codomain_dim);
  return corank_bound_impl(
      dims,
      [&](const auto& visit) {
        for (size_t c = 0; c < g.maps.size(); ++c) {
          for (const auto& t : g.manifold.charts[c].box.grid(
                   points_per_axis > 0 ? points_per_axis
                                       : g.manifold.sample_density)) {
            visit(static_cast<int>(c), t, g.maps[c].jacobian(t));
          }
        }
      },
      rank_tol);
}

M1Result build_m1(const SmoothMap& f_chart, const SmoothMap& f_outer,
                  const Eigen::VectorXd& t, const LinearPerturbation& alpha,
                  double rank_tol) {
  const int n = f_chart.domain_dim();
  const int m = f_chart.codomain_dim();
  const int l = f_outer.codomain_dim();
  if (f_outer.domain_dim() != m) {
    throw DimensionMismatch("outer map domain does not match chart ambient");
  }
  if (alpha.rows() != l || alpha.cols() != m) {
    throw DimensionMismatch("perturbation shape does not match outer map");
  }
  const Eigen::MatrixXd jf = f_chart.jacobian(t);  // m x n
  if (numerical_rank(jf, rank_tol) < n) {
    throw NotImmersionAt("chart Jacobian has rank below n at the given point");
  }
  const Eigen::VectorXd fval = f_chart.evaluate(t);

  M1Result res;
  res.expected_rank = n + l + n * l;
  res.matrix = Eigen::MatrixXd::Zero(n + l + n * l, n + l + m * l);
  res.matrix.topLeftCorner(n + l, n + l).setIdentity();
  // Perturbation-parameter derivatives: the value rows pick up the chart
  // values, the jet rows one transposed chart Jacobian per component.
  for (int i = 0; i < l; ++i) {
    for (int j = 0; j < m; ++j) res.matrix(n + i, n + l + i * m + j) = fval(j);
    res.matrix.block(n + l + i * n, n + l + i * m, n, m) = jf.transpose();
  }
  res.rank = numerical_rank(res.matrix, rank_tol);
  return res;
}

// ---------------------------------------------------------------------------
// Singular point location
// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd adjugate(const Eigen::MatrixXd& s) {
  const int v = static_cast<int>(s.rows());
  if (v == 1) return Eigen::MatrixXd::Ones(1, 1);
  Eigen::MatrixXd adj(v, v);
  Eigen::MatrixXd minor(v - 1, v - 1);
  for (int p = 0; p < v; ++p) {
    for (int q = 0; q < v; ++q) {
      int mr = 0;
      for (int r = 0; r < v; ++r) {
        if (r == p) continue;
        int mc = 0;
        for (int c = 0; c < v; ++c) {
          if (c == q) continue;
          minor(mr, mc++) = s(r, c);
        }
        ++mr;
      }
      const double cof = ((p + q) % 2 == 0 ? 1.0 : -1.0) * minor.determinant();
      adj(q, p) = cof;  // adjugate is the transposed cofactor matrix
    }
  }
  return adj;
}

/// Residual of maximal minors and its exact derivative from the Hessians.
struct MinorSystem {
  std::vector<std::vector<int>> row_sets;
  std::vector<std::vector<int>> col_sets;
  int v = 0;

  MinorSystem(int l, int n) : v(std::min(l, n)) {
    row_sets = k_subsets(l, v);
    col_sets = k_subsets(n, v);
  }

  int size() const {
    return static_cast<int>(row_sets.size() * col_sets.size());
  }

  void eval(const SmoothMap::Jet2& jet, Eigen::VectorXd& r,
            Eigen::MatrixXd& jr) const {
    const int n = static_cast<int>(jet.jac.cols());
    r.resize(size());
    jr.resize(size(), n);
    int idx = 0;
    Eigen::MatrixXd sub(v, v);
    Eigen::MatrixXd dsub(v, v);
    for (const auto& rows : row_sets) {
      for (const auto& cols : col_sets) {
        for (int p = 0; p < v; ++p) {
          for (int q = 0; q < v; ++q) sub(p, q) = jet.jac(rows[p], cols[q]);
        }
        r(idx) = sub.determinant();
        const Eigen::MatrixXd adj = adjugate(sub);
        for (int a = 0; a < n; ++a) {
          for (int p = 0; p < v; ++p) {
            for (int q = 0; q < v; ++q) {
              dsub(p, q) = jet.hess[rows[p]](a, cols[q]);
            }
          }
          jr(idx, a) = (adj * dsub).trace();
        }
        ++idx;
      }
    }
  }
};

}  // namespace

std::vector<Eigen::VectorXd> find_singular_points(const SmoothMap& g,
                                                  const Box& box,
                                                  const SearchOptions& opt) {
  const int n = g.domain_dim();
  const int l = g.codomain_dim();
  const MinorSystem minors(l, n);
  const int v = std::min(l, n);

  std::vector<Eigen::VectorXd> found;
  Eigen::VectorXd r;
  Eigen::MatrixXd jr;
  for (const auto& seed : box.grid(opt.grid_per_axis)) {
    Eigen::VectorXd t = seed;
    double lambda = 1e-3;
    auto jet = g.eval_jet2(t);
    minors.eval(jet, r, jr);
    double rnorm = r.norm();
    for (int iter = 0; iter < opt.max_iterations; ++iter) {
      bool stepped = false;
      for (int attempt = 0; attempt < 8; ++attempt) {
        const Eigen::MatrixXd h =
            jr.transpose() * jr +
            lambda * Eigen::MatrixXd::Identity(n, n);
        const Eigen::VectorXd delta = h.ldlt().solve(-jr.transpose() * r);
        const Eigen::VectorXd next = box.clamp_interior(t + delta, 1e-4);
        const auto next_jet = g.eval_jet2(next);
        Eigen::VectorXd next_r;
        Eigen::MatrixXd next_jr;
        minors.eval(next_jet, next_r, next_jr);
        if (next_r.norm() < rnorm) {
          const double step = (next - t).norm();
          t = next;
          jet = next_jet;
          r = next_r;
          jr = next_jr;
          rnorm = r.norm();
          lambda = std::max(lambda / 3.0, 1e-12);
          stepped = true;
          if (step < opt.newton_tol) iter = opt.max_iterations;
          break;
        }
        lambda *= 10.0;
      }
      if (!stepped) break;
    }
    const double svmax = kth_singular_value(jet.jac, 1);
    const double svmin = kth_singular_value(jet.jac, v);
    if (svmin > opt.singular_tol * std::max(svmax, 1.0)) continue;
    bool duplicate = false;
    for (const auto& p : found) {
      if ((p - t).norm() < opt.cluster_radius) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) found.push_back(t);
  }
  std::sort(found.begin(), found.end(),
            [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
              return std::lexicographical_compare(a.data(), a.data() + a.size(),
                                                  b.data(),
                                                  b.data() + b.size());
            });
  return found;
}

std::vector<LocatedPoint> find_singular_points(const ChartedMap& g,
                                               const SearchOptions& opt) {
  std::vector<LocatedPoint> merged;
  for (size_t c = 0; c < g.maps.size(); ++c) {
    for (auto& t :
         find_singular_points(g.maps[c], g.manifold.charts[c].box, opt)) {
      LocatedPoint lp;
      lp.chart = static_cast<int>(c);
      lp.manifold_point = g.manifold.charts[c].map.evaluate(t);
      lp.param = std::move(t);
      bool duplicate = false;
      for (const auto& other : merged) {
        if ((other.manifold_point - lp.manifold_point).norm() <
            opt.cluster_radius) {
          duplicate = true;
          break;
        }
      }
      if (!duplicate) merged.push_back(std::move(lp));
    }
  }
  return merged;
}

}  // namespace plab
