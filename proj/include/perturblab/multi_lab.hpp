#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "perturblab/jet_lab.hpp"
#include "perturblab/map_zoo.hpp"

namespace plab {

/// An s-tuple of pairwise distinct manifold points given in chart coordinates.
struct MultiPoint {
  std::vector<int> charts;
  std::vector<Eigen::VectorXd> params;

  int s() const { return static_cast<int>(params.size()); }
};

/// When the manifold is declared injective, distinct manifold points are
/// exactly distinct chart images; otherwise only same-chart parameter
/// distance decides (the non-injective catalog entries are single-chart).
struct DistinctnessOptions {
  double param_tol = 1e-3;
  double image_tol = 1e-4;
};

bool points_distinct(const ChartedManifold& n, int chart_a,
                     const Eigen::VectorXd& param_a, int chart_b,
                     const Eigen::VectorXd& param_b,
                     const DistinctnessOptions& opt = {});

bool multipoint_distinct(const ChartedManifold& n, const MultiPoint& mp,
                         const DistinctnessOptions& opt = {});

/// Transversality of the s-fold map to the small diagonal at the given
/// tuple. On the stratum iff all image values coincide within coincide_tol;
/// transverse iff the stacked difference-derivative matrix (rows: blocks
/// [Jg(q_1) | ... | -Jg(q_i) | ...], one block row per i = 2..s) reaches its
/// full l(s-1) rows of rank. Throws DegenerateTuple on a non-distinct tuple.
TransversalityVerdict delta_transversality(const ChartedMap& g,
                                           const MultiPoint& mp,
                                           double coincide_tol,
                                           double rank_tol = kDefaultRankTol,
                                           const DistinctnessOptions& d = {});

struct MultiSearchOptions {
  int grid_per_axis = 0;  // 0: the manifold's sample density
  int max_seeds = 256;
  double seed_gap = 0.5;  // image gap below which a grid tuple is refined
  double newton_tol = 1e-10;
  int max_iterations = 60;
  double coincide_tol = 1e-8;
  double cluster_radius = 1e-9;  // 10x the Newton tolerance
  DistinctnessOptions distinct;
};

struct FoundMultiPoint {
  MultiPoint point;
  double image_gap = 0.0;
};

struct MultiPointSearch {
  std::vector<FoundMultiPoint> points;
  bool budget_exhausted = false;
  int seeds_tried = 0;
  /// Smallest image gap seen across distinct refined tuples and the raw grid.
  double min_gap_seen = 0.0;
};

/// Grid seeding plus damped Gauss-Newton descent on the summed image gaps;
/// converged tuples below coincide_tol are deduplicated by sorted parameter
/// tuples within cluster_radius.
MultiPointSearch find_multiple_points(const ChartedMap& g, int s,
                                      const MultiSearchOptions& opt);

struct CrossingCheck {
  MultiPoint point;
  double image_gap = 0.0;
  TransversalityVerdict verdict;
};

struct NormalCrossingsReport {
  bool is_normal_crossings_at_found_points = false;
  std::vector<CrossingCheck> checks;
  double min_margin = 0.0;  // over on-stratum checks; +inf when none found
  bool budget_exhausted = false;
};

/// Searches multiple points for every s in [2, s_max] and requires diagonal
/// transversality at each; vacuously true when nothing is found.
NormalCrossingsReport normal_crossings_verdict(const ChartedMap& g, int s_max,
                                               const MultiSearchOptions& opt,
                                               double rank_tol =
                                                   kDefaultRankTol);

// ---------------------------------------------------------------------------
// The s_f invariant
// ---------------------------------------------------------------------------

struct SfWitness {
  std::vector<int> indices;  // cloud indices
  double margin = 0.0;       // (s-1)-th singular value of the differences
};

struct SfProfile {
  int s_f = 0;
  bool exhaustive = false;  // exact over the cloud vs upper-confidence
  bool bound_ok = false;    // 2 <= s_f <= m+1
  int ambient_dim = 0;
  int cloud_size = 0;
  long tuples_checked = 0;
  std::vector<SfWitness> witnesses;  // one independent tuple per s in [2, s_f]
  std::optional<SfWitness> dependent_tuple;
};

/// Exact largest s such that every s-subset of the cloud is affinely
/// independent. Exhaustive, so intended for clouds of at most ~12 points.
SfProfile compute_sf(const std::vector<Eigen::VectorXd>& cloud,
                     double rank_tol = kDefaultRankTol);

struct SfEstimateOptions {
  int grid_per_axis = 0;
  int subcloud_size = 12;
  int max_tuple_size = 0;  // 0: min(m+2, subcloud size)
  long random_tuples = 20000;
  std::uint64_t seed = 0;
  double rank_tol = kDefaultRankTol;
  double dedupe_radius = 1e-9;
};

/// Upper-confidence estimate over a sampled image cloud: exhaustive scans of
/// structured sub-clouds (windows along grid lines, where curves of the
/// manifold force dependencies) plus randomized tuple sampling. Exact (and
/// flagged exhaustive) when the deduplicated cloud has <= subcloud_size
/// points.
SfProfile estimate_sf(const ChartedManifold& n, const SfEstimateOptions& opt);

// ---------------------------------------------------------------------------
// Injectivity and fibers
// ---------------------------------------------------------------------------

struct InjectivityReport {
  bool is_injective_at_resolution = false;
  double min_image_gap = 0.0;
  std::optional<MultiPoint> witness;
  bool budget_exhausted = false;
};

InjectivityReport injectivity_check(const ChartedMap& g,
                                    const MultiSearchOptions& opt);

// Near-tangent fibers leave a residual valley of width ~sqrt(residual_tol);
// the cluster radius sits above that so valley scatter merges into one
// solution. Counting stays a lower bound either way.
struct FiberOptions {
  int grid_per_axis = 9;
  double newton_tol = 1e-12;
  int max_iterations = 60;
  double residual_tol = 1e-9;
  double cluster_radius = 1e-3;
};

/// Number of clustered Newton solutions of f(x) = y seeded from a grid over
/// the box; a lower bound of the true fiber size.
int fiber_cardinality(const SmoothMap& f, const Eigen::VectorXd& y,
                      const Box& box, const FiberOptions& opt = {});

// ---------------------------------------------------------------------------
// Multi-point rank certificate
// ---------------------------------------------------------------------------

/// The ls x (l + ml) rank certificate behind the diagonal-transversality
/// argument: per point, an identity block (the diagonal directions) next to
/// the perturbation-parameter derivatives, which are l diagonal copies of the
/// chart-value row. Subtracting the first block row turns the parameter block
/// into difference vectors, so the rank is ls exactly when the s-1
/// differences are linearly independent.
struct M2Result {
  Eigen::MatrixXd matrix;
  int rank = 0;
  Eigen::MatrixXd reduced;  // after the block-row reduction
  int reduced_rank = 0;
  int difference_rank = 0;
  int expected_rank = 0;
  bool differences_independent = false;
};

M2Result build_m2(const std::vector<Eigen::VectorXd>& chart_values,
                  const LinearPerturbation& alpha,
                  double rank_tol = kDefaultRankTol);

}  // namespace plab
