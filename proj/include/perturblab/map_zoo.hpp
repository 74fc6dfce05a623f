#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "perturblab/grid.hpp"
#include "perturblab/smooth_map.hpp"

namespace plab {

/// A linear map R^m -> R^l by its representing matrix.
struct LinearPerturbation {
  Eigen::MatrixXd matrix;  // l x m

  explicit LinearPerturbation(Eigen::MatrixXd a);
  static LinearPerturbation zero(int l, int m) {
    return LinearPerturbation(Eigen::MatrixXd::Zero(l, m));
  }

  int rows() const { return static_cast<int>(matrix.rows()); }
  int cols() const { return static_cast<int>(matrix.cols()); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return matrix * x; }

  LinearPerturbation operator+(const LinearPerturbation& o) const {
    return LinearPerturbation(matrix + o.matrix);
  }
};

/// F_pi = F + pi, sharing F's domain guard. The Jacobian gains the matrix of
/// pi; Hessians are untouched.
SmoothMap perturb(const SmoothMap& f, const LinearPerturbation& pi);

/// F o chart with chain-rule-consistent derivatives. The composite guard
/// requires the chart's guard and membership of the image in F's domain.
SmoothMap compose(const SmoothMap& f, const SmoothMap& chart);

// ---------------------------------------------------------------------------
// Generalized distance-squared mappings
// ---------------------------------------------------------------------------

enum class GdsmVariant { general, distance_squared, lorentzian };

/// G_(p,A)(x) = (sum_j a_1j (x_j - p_1j)^2, ..., sum_j a_lj (x_j - p_lj)^2).
struct GdsmSpec {
  Eigen::MatrixXd centers;  // l x m, row i is the i-th central point
  Eigen::MatrixXd coeffs;   // l x m
  GdsmVariant variant = GdsmVariant::general;

  int l() const { return static_cast<int>(coeffs.rows()); }
  int m() const { return static_cast<int>(coeffs.cols()); }
  void validate() const;  // InvalidSpec on shape/variant violations
};

GdsmSpec distance_squared_spec(Eigen::MatrixXd centers);
GdsmSpec lorentzian_spec(Eigen::MatrixXd centers);

SmoothMap make_gdsm(const GdsmSpec& spec);

/// Quadratic part alone: F_i(x) = sum_j a_ij x_j^2. Perturbing this with the
/// matrix psi(p) reproduces G_(p,A) up to a target translation, which no
/// rank or crossing verdict can see.
SmoothMap gdsm_quadratic_part(const Eigen::MatrixXd& coeffs);

/// psi(p)_ij = -2 a_ij p_ij, the change of parameters between central points
/// and linear perturbations. Bijective exactly when all a_ij are nonzero.
LinearPerturbation psi_central_to_linear(const GdsmSpec& spec);
Eigen::MatrixXd psi_linear_to_central(const LinearPerturbation& alpha,
                                      const Eigen::MatrixXd& coeffs);

// ---------------------------------------------------------------------------
// Normal forms
// ---------------------------------------------------------------------------

enum class NormalFormKind { fold, whitney_umbrella, inclusion, definite_fold };

NormalFormKind normal_form_kind_from_name(const std::string& name);

/// fold(n): (x_1,...,x_n) -> (x_1,...,x_{n-1},x_n^2)
/// whitney_umbrella(n): (x_1,...,x_n) -> (x_1^2, x_1x_2,...,x_1x_n, x_2,...,x_n)
/// inclusion(n,l): append l-n zeros; definite_fold(m) is fold(m).
/// codomain_dim is only consulted for inclusion.
SmoothMap normal_form(NormalFormKind kind, int n, int codomain_dim = -1);

// ---------------------------------------------------------------------------
// Charted manifolds
// ---------------------------------------------------------------------------

struct Chart {
  Box box;
  SmoothMap map;  // R^n -> R^m
};

struct GridPoint {
  int chart = 0;
  Eigen::VectorXd param;
  Eigen::VectorXd image;  // chart map value in R^m
};

/// A manifold presented as parameter charts into R^m. Declared flags are
/// trusted inputs; validate() checks them at grid resolution only.
struct ChartedManifold {
  int intrinsic_dim = 0;  // n
  int ambient_dim = 0;    // m
  std::vector<Chart> charts;
  bool declared_immersion = false;
  bool declared_injective = false;
  int sample_density = 32;  // points per axis

  std::vector<GridPoint> sample_grid(int points_per_axis = 0) const;
  void validate(double rank_tol = 1e-8) const;
};

enum class ManifoldKind { circle, sphere2, nodal_cubic, spiral, tangency_curve };

ManifoldKind manifold_kind_from_name(const std::string& name);
std::string manifold_kind_name(ManifoldKind kind);

/// Catalog atlases. circle: two overlapping angle charts; sphere2: two
/// stereographic charts; the curves are single-chart.
ChartedManifold chart_atlas(ManifoldKind kind, int ambient_dim);

/// t -> (t, h(t)) over the given parameter box; injective immersion for any h.
ChartedManifold graph_curve(const SmoothMap& h, const Box& box);

/// The composite F o f realized chart by chart.
struct ChartedMap {
  ChartedManifold manifold;
  std::vector<SmoothMap> maps;  // one per chart, R^n -> R^l
  int codomain_dim = 0;

  const SmoothMap& map_for(int chart) const { return maps.at(chart); }
};

/// Composes F with every chart. F's guard is checked on a sample grid of each
/// chart box (DomainViolation names the chart on failure).
ChartedMap compose_over_atlas(const SmoothMap& f, const ChartedManifold& n,
                              int guard_check_density = 8);

}  // namespace plab
