#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "perturblab/linalg.hpp"
#include "perturblab/map_zoo.hpp"
#include "perturblab/smooth_map.hpp"

namespace plab {

/// Chart data of a 1-jet: base point, value and first derivative.
struct Jet1 {
  Eigen::VectorXd base;
  Eigen::VectorXd value;
  Eigen::MatrixXd jac;
};

/// Source/target dimension pair with v = min(n, l).
struct Dimensions {
  int n = 0;
  int l = 0;

  Dimensions(int n_, int l_);
  int v() const { return n < l ? n : l; }
};

/// Outcome of one stratum membership + transversality check.
struct TransversalityVerdict {
  bool on_stratum = false;
  int corank = 0;
  double margin = 0.0;  // smallest retained singular value of the normal map
  bool transverse = false;
  int codim = 0;
};

Jet1 jet1(const SmoothMap& g, const Eigen::VectorXd& t);

/// min(rows, cols) minus the scale-aware numerical rank.
int corank(const Eigen::MatrixXd& jac, double tol = kDefaultRankTol);

/// Codimension of the corank-k stratum: (n - v + k)(l - v + k).
int sigma_codim(const Dimensions& dims, int k);

/// Largest k0 >= 0 with (n - v + k0)(l - v + k0) <= n; the top corank a
/// generic map of these dimensions can exhibit.
int max_corank_k0(const Dimensions& dims);

/// Membership of j^1 g(t) in the corank-k stratum, plus the second-order
/// transversality test: with J = Jg(t) of rank r and U2/V2 spanning the left
/// and right null spaces, the directional derivative u -> U2^T (D_u J) V2
/// must cover the full (l-r) x (n-r) normal block. The margin is the smallest
/// singular value the surjectivity needs.
TransversalityVerdict sigma_transversality(const SmoothMap& g,
                                           const Eigen::VectorXd& t, int k,
                                           double tol,
                                           double rank_tol = kDefaultRankTol);

/// User-supplied stratum with the same verdict contract: a membership test on
/// Jacobians plus a normal map whose rows span the normal directions.
struct InvariantFiber {
  std::function<bool(const Eigen::MatrixXd&)> contains;
  std::function<Eigen::MatrixXd(const SmoothMap&, const Eigen::VectorXd&)>
      normal_map;  // rows = normal dimension, cols = n
  int codim = 0;
};

TransversalityVerdict fiber_transversality(const SmoothMap& g,
                                           const Eigen::VectorXd& t,
                                           const InvariantFiber& fiber,
                                           double tol,
                                           double rank_tol = kDefaultRankTol);

enum class MorseClass { regular, nondegenerate_critical, degenerate_critical };

/// Scalar maps only: regular when the gradient is above tol, otherwise
/// nondegenerate iff |det Hess| > tol.
MorseClass morse_verdict(const SmoothMap& g, const Eigen::VectorXd& t,
                         double tol);

/// Sufficient cross-cap criterion for maps R^n -> R^(2n-1), n >= 2: corank
/// one and transversality to the corank-1 stratum.
bool whitney_umbrella_verdict(const SmoothMap& g, const Eigen::VectorXd& t,
                              double tol, double rank_tol = kDefaultRankTol);

struct ImmersionReport {
  double min_singular_value = 0.0;
  int witness_chart = 0;
  Eigen::VectorXd witness;
  bool is_immersion_at_samples = false;
};

ImmersionReport immersion_check(const SmoothMap& g,
                                const std::vector<Eigen::VectorXd>& samples,
                                double tol);
ImmersionReport immersion_check(const ChartedMap& g, int points_per_axis,
                                double tol);

struct CorankBoundReport {
  int max_corank_observed = 0;
  int k0 = 0;
  bool respects_bound = false;
  int witness_chart = 0;
  Eigen::VectorXd witness;  // sample attaining the max corank
  double margin = 0.0;      // min over samples of sigma_(v-k0)(J)
};

CorankBoundReport corank_bound_check(const SmoothMap& g,
                                     const std::vector<Eigen::VectorXd>& samples,
                                     double rank_tol = kDefaultRankTol);
CorankBoundReport corank_bound_check(const ChartedMap& g, int points_per_axis,
                                     double rank_tol = kDefaultRankTol);

/// The (n+l+nl) x (n+l+ml) rank certificate behind the jet-level genericity
/// argument: an (n+l) identity block for the free base/target directions next
/// to the perturbation-parameter derivatives of the jet section, whose
/// derivative block is l diagonal copies of the transposed chart Jacobian.
/// Rank n+l+nl certifies that perturbation parameters sweep the jet fiber.
struct M1Result {
  Eigen::MatrixXd matrix;
  int rank = 0;
  int expected_rank = 0;
};

M1Result build_m1(const SmoothMap& f_chart, const SmoothMap& f_outer,
                  const Eigen::VectorXd& t, const LinearPerturbation& alpha,
                  double rank_tol = kDefaultRankTol);

// ---------------------------------------------------------------------------
// Singular point location
// ---------------------------------------------------------------------------

struct SearchOptions {
  int grid_per_axis = 16;
  double newton_tol = 1e-10;
  int max_iterations = 50;
  double cluster_radius = 1e-6;
  double singular_tol = kDefaultRankTol;  // relative; marks rank drop
};

struct LocatedPoint {
  int chart = 0;
  Eigen::VectorXd param;
  Eigen::VectorXd manifold_point;  // chart image in R^m (identifies the point)
};

/// Points where the Jacobian drops below full rank, found by damped
/// Gauss-Newton on the vector of maximal minors seeded from a grid.
std::vector<Eigen::VectorXd> find_singular_points(const SmoothMap& g,
                                                  const Box& box,
                                                  const SearchOptions& opt);

/// Atlas-level sweep; duplicates across overlapping charts are merged by
/// their manifold point.
std::vector<LocatedPoint> find_singular_points(const ChartedMap& g,
                                               const SearchOptions& opt);

}  // namespace plab
