#include "perturblab/map_zoo.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "perturblab/linalg.hpp"

namespace plab {
namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

template <class S>
std::vector<S> padded(std::vector<S> y, int ambient_dim) {
  while (static_cast<int>(y.size()) < ambient_dim) y.push_back(S(0.0));
  return y;
}

}  // namespace

LinearPerturbation::LinearPerturbation(Eigen::MatrixXd a)
    : matrix(std::move(a)) {
  if (matrix.rows() < 1 || matrix.cols() < 1) {
    throw DimensionMismatch("perturbation matrix must be nonempty");
  }
  if (!matrix.allFinite()) {
    throw InvalidSpec("perturbation matrix has non-finite entries");
  }
}

SmoothMap perturb(const SmoothMap& f, const LinearPerturbation& pi) {
  if (pi.rows() != f.codomain_dim() || pi.cols() != f.domain_dim()) {
    throw DimensionMismatch(
        "perturbation is " + std::to_string(pi.rows()) + "x" +
        std::to_string(pi.cols()) + ", map needs " +
        std::to_string(f.codomain_dim()) + "x" + std::to_string(f.domain_dim()));
  }
  const Eigen::MatrixXd a = pi.matrix;
  auto body = [f, a](const auto& x) {
    auto y = f.apply_body(x);
    for (int i = 0; i < a.rows(); ++i) {
      for (int j = 0; j < a.cols(); ++j) y[i] = y[i] + a(i, j) * x[j];
    }
    return y;
  };
  auto guard = [f](const Eigen::VectorXd& x) { return f.in_domain(x); };
  return SmoothMap(f.domain_dim(), f.codomain_dim(), body, guard);
}

SmoothMap compose(const SmoothMap& f, const SmoothMap& chart) {
  if (chart.codomain_dim() != f.domain_dim()) {
    throw DimensionMismatch("cannot compose: chart lands in R^" +
                            std::to_string(chart.codomain_dim()) +
                            ", outer map expects R^" +
                            std::to_string(f.domain_dim()));
  }
  auto body = [f, chart](const auto& x) {
    return f.apply_body(chart.apply_body(x));
  };
  auto guard = [f, chart](const Eigen::VectorXd& x) {
    if (!chart.in_domain(x)) return false;
    std::vector<double> xs(x.data(), x.data() + x.size());
    std::vector<double> ys = chart.apply_body(xs);
    return f.in_domain(Eigen::Map<const Eigen::VectorXd>(
        ys.data(), static_cast<Eigen::Index>(ys.size())));
  };
  return SmoothMap(chart.domain_dim(), f.codomain_dim(), body, guard);
}

// ---------------------------------------------------------------------------
// Generalized distance-squared mappings
// ---------------------------------------------------------------------------

void GdsmSpec::validate() const {
  if (coeffs.rows() < 1 || coeffs.cols() < 1) {
    throw InvalidSpec("coefficient matrix must be nonempty");
  }
  if (centers.rows() != coeffs.rows() || centers.cols() != coeffs.cols()) {
    throw InvalidSpec("centers and coefficients must have matching shapes");
  }
  if (!centers.allFinite() || !coeffs.allFinite()) {
    throw InvalidSpec("centers/coefficients must be finite");
  }
  switch (variant) {
    case GdsmVariant::general:
      for (int i = 0; i < coeffs.rows(); ++i) {
        for (int j = 0; j < coeffs.cols(); ++j) {
          if (coeffs(i, j) == 0.0) {
            throw InvalidSpec("general variant requires all coefficients "
                              "nonzero; a(" + std::to_string(i) + "," +
                              std::to_string(j) + ") = 0");
          }
        }
      }
      break;
    case GdsmVariant::distance_squared:
      if (!(coeffs.array() == 1.0).all()) {
        throw InvalidSpec("distance_squared variant requires all "
                          "coefficients equal to 1");
      }
      break;
    case GdsmVariant::lorentzian:
      for (int i = 0; i < coeffs.rows(); ++i) {
        if (coeffs(i, 0) != -1.0) {
          throw InvalidSpec("lorentzian variant requires first column -1");
        }
        for (int j = 1; j < coeffs.cols(); ++j) {
          if (coeffs(i, j) != 1.0) {
            throw InvalidSpec("lorentzian variant requires coefficients 1 "
                              "off the first column");
          }
        }
      }
      break;
  }
}

GdsmSpec distance_squared_spec(Eigen::MatrixXd centers) {
  GdsmSpec spec;
  spec.coeffs = Eigen::MatrixXd::Ones(centers.rows(), centers.cols());
  spec.centers = std::move(centers);
  spec.variant = GdsmVariant::distance_squared;
  spec.validate();
  return spec;
}

GdsmSpec lorentzian_spec(Eigen::MatrixXd centers) {
  GdsmSpec spec;
  spec.coeffs = Eigen::MatrixXd::Ones(centers.rows(), centers.cols());
  spec.coeffs.col(0).setConstant(-1.0);
  spec.centers = std::move(centers);
  spec.variant = GdsmVariant::lorentzian;
  spec.validate();
  return spec;
}

SmoothMap make_gdsm(const GdsmSpec& spec) {
  spec.validate();
  const Eigen::MatrixXd a = spec.coeffs;
  const Eigen::MatrixXd p = spec.centers;
  auto body = [a, p](const auto& x) {
    using S = std::decay_t<decltype(x[0])>;
    std::vector<S> y;
    y.reserve(static_cast<size_t>(a.rows()));
    for (int i = 0; i < a.rows(); ++i) {
      S acc = S(0.0);
      for (int j = 0; j < a.cols(); ++j) {
        S d = x[j] - p(i, j);
        acc = acc + a(i, j) * (d * d);
      }
      y.push_back(acc);
    }
    return y;
  };
  return SmoothMap(spec.m(), spec.l(), body);
}

SmoothMap gdsm_quadratic_part(const Eigen::MatrixXd& coeffs) {
  if (coeffs.rows() < 1 || coeffs.cols() < 1) {
    throw InvalidSpec("coefficient matrix must be nonempty");
  }
  const Eigen::MatrixXd a = coeffs;
  auto body = [a](const auto& x) {
    using S = std::decay_t<decltype(x[0])>;
    std::vector<S> y;
    y.reserve(static_cast<size_t>(a.rows()));
    for (int i = 0; i < a.rows(); ++i) {
      S acc = S(0.0);
      for (int j = 0; j < a.cols(); ++j) acc = acc + a(i, j) * (x[j] * x[j]);
      y.push_back(acc);
    }
    return y;
  };
  return SmoothMap(static_cast<int>(coeffs.cols()),
                   static_cast<int>(coeffs.rows()), body);
}

LinearPerturbation psi_central_to_linear(const GdsmSpec& spec) {
  spec.validate();
  for (int i = 0; i < spec.coeffs.rows(); ++i) {
    for (int j = 0; j < spec.coeffs.cols(); ++j) {
      if (spec.coeffs(i, j) == 0.0) {
        throw InvalidSpec("psi is not invertible: zero coefficient");
      }
    }
  }
  return LinearPerturbation(
      (-2.0 * spec.coeffs.array() * spec.centers.array()).matrix());
}

Eigen::MatrixXd psi_linear_to_central(const LinearPerturbation& alpha,
                                      const Eigen::MatrixXd& coeffs) {
  if (alpha.matrix.rows() != coeffs.rows() ||
      alpha.matrix.cols() != coeffs.cols()) {
    throw DimensionMismatch("perturbation and coefficient shapes differ");
  }
  for (int i = 0; i < coeffs.rows(); ++i) {
    for (int j = 0; j < coeffs.cols(); ++j) {
      if (coeffs(i, j) == 0.0) {
        throw InvalidSpec("psi is not invertible: zero coefficient");
      }
    }
  }
  return (alpha.matrix.array() / (-2.0 * coeffs.array())).matrix();
}

// ---------------------------------------------------------------------------
// Normal forms
// ---------------------------------------------------------------------------

NormalFormKind normal_form_kind_from_name(const std::string& name) {
  if (name == "fold") return NormalFormKind::fold;
  if (name == "whitney_umbrella") return NormalFormKind::whitney_umbrella;
  if (name == "inclusion") return NormalFormKind::inclusion;
  if (name == "definite_fold") return NormalFormKind::definite_fold;
  throw UnknownKind("unknown normal form: " + name);
}

SmoothMap normal_form(NormalFormKind kind, int n, int codomain_dim) {
  if (n < 1) throw BadDimension("normal form needs n >= 1");
  switch (kind) {
    case NormalFormKind::fold:
    case NormalFormKind::definite_fold: {
      auto body = [n](const auto& x) {
        using S = std::decay_t<decltype(x[0])>;
        std::vector<S> y(x.begin(), x.end());
        y[n - 1] = x[n - 1] * x[n - 1];
        return y;
      };
      return SmoothMap(n, n, body);
    }
    case NormalFormKind::whitney_umbrella: {
      if (n < 2) throw BadDimension("whitney umbrella needs n >= 2");
      auto body = [n](const auto& x) {
        using S = std::decay_t<decltype(x[0])>;
        std::vector<S> y;
        y.reserve(static_cast<size_t>(2 * n - 1));
        y.push_back(x[0] * x[0]);
        for (int j = 1; j < n; ++j) y.push_back(x[0] * x[j]);
        for (int j = 1; j < n; ++j) y.push_back(x[j]);
        return y;
      };
      return SmoothMap(n, 2 * n - 1, body);
    }
    case NormalFormKind::inclusion: {
      if (codomain_dim < n) {
        throw BadDimension("inclusion needs codomain dimension >= " +
                           std::to_string(n));
      }
      const int l = codomain_dim;
      auto body = [l](const auto& x) {
        using S = std::decay_t<decltype(x[0])>;
        return padded(std::vector<S>(x.begin(), x.end()), l);
      };
      return SmoothMap(n, l, body);
    }
  }
  throw UnknownKind("unhandled normal form kind");
}

// ---------------------------------------------------------------------------
// Charted manifolds
// ---------------------------------------------------------------------------

std::vector<GridPoint> ChartedManifold::sample_grid(int points_per_axis) const {
  const int density = points_per_axis > 0 ? points_per_axis : sample_density;
  std::vector<GridPoint> out;
  for (size_t c = 0; c < charts.size(); ++c) {
    for (auto& t : charts[c].box.grid(density)) {
      GridPoint gp;
      gp.chart = static_cast<int>(c);
      gp.image = charts[c].map.evaluate(t);
      gp.param = std::move(t);
      out.push_back(std::move(gp));
    }
  }
  return out;
}

void ChartedManifold::validate(double rank_tol) const {
  if (intrinsic_dim < 1 || ambient_dim < intrinsic_dim) {
    throw InvalidSpec("manifold dimensions are inconsistent");
  }
  if (charts.empty()) throw InvalidSpec("manifold has no charts");
  for (size_t c = 0; c < charts.size(); ++c) {
    const auto& chart = charts[c];
    if (chart.box.dim() != intrinsic_dim ||
        chart.map.domain_dim() != intrinsic_dim ||
        chart.map.codomain_dim() != ambient_dim) {
      throw InvalidSpec("chart " + std::to_string(c) +
                        " has inconsistent dimensions");
    }
  }
  const auto grid = sample_grid();
  if (declared_immersion) {
    for (const auto& gp : grid) {
      const Eigen::MatrixXd j = charts[gp.chart].map.jacobian(gp.param);
      if (kth_singular_value(j, intrinsic_dim) <= rank_tol) {
        throw InvalidSpec("declared immersion fails at a grid sample of chart " +
                          std::to_string(gp.chart));
      }
    }
  }
  if (declared_injective) {
    // Only same-chart pairs are decidable here: overlapping charts
    // legitimately map distinct parameters to one manifold point.
    for (size_t c = 0; c < charts.size(); ++c) {
      const double step = charts[c].box.max_extent() / sample_density;
      for (size_t a = 0; a < grid.size(); ++a) {
        if (grid[a].chart != static_cast<int>(c)) continue;
        for (size_t b = a + 1; b < grid.size(); ++b) {
          if (grid[b].chart != static_cast<int>(c)) continue;
          if ((grid[a].param - grid[b].param).norm() <= step) continue;
          if ((grid[a].image - grid[b].image).norm() <= 1e-9) {
            throw InvalidSpec("declared injectivity fails on chart " +
                              std::to_string(c));
          }
        }
      }
    }
  }
}

ManifoldKind manifold_kind_from_name(const std::string& name) {
  if (name == "circle") return ManifoldKind::circle;
  if (name == "sphere2") return ManifoldKind::sphere2;
  if (name == "nodal_cubic") return ManifoldKind::nodal_cubic;
  if (name == "spiral") return ManifoldKind::spiral;
  if (name == "tangency_curve") return ManifoldKind::tangency_curve;
  throw UnknownKind("unknown manifold: " + name);
}

std::string manifold_kind_name(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::circle: return "circle";
    case ManifoldKind::sphere2: return "sphere2";
    case ManifoldKind::nodal_cubic: return "nodal_cubic";
    case ManifoldKind::spiral: return "spiral";
    case ManifoldKind::tangency_curve: return "tangency_curve";
  }
  return "?";
}

namespace {

Box interval(double lo, double hi) {
  Box b;
  b.lo = Eigen::VectorXd::Constant(1, lo);
  b.hi = Eigen::VectorXd::Constant(1, hi);
  return b;
}

Box square(double lo, double hi) {
  Box b;
  b.lo = Eigen::VectorXd::Constant(2, lo);
  b.hi = Eigen::VectorXd::Constant(2, hi);
  return b;
}

SmoothMap circle_chart(int ambient_dim) {
  auto body = [ambient_dim](const auto& x) {
    using S = std::decay_t<decltype(x[0])>;
    std::vector<S> y;
    y.push_back(cos(x[0]));
    y.push_back(sin(x[0]));
    return padded(std::move(y), ambient_dim);
  };
  return SmoothMap(1, ambient_dim, body);
}

/// Inverse stereographic projection; sign +1 places the chart's blind spot at
/// the north pole, -1 at the south pole.
SmoothMap sphere_chart(int ambient_dim, double sign) {
  auto body = [ambient_dim, sign](const auto& x) {
    using S = std::decay_t<decltype(x[0])>;
    S r2 = x[0] * x[0] + x[1] * x[1];
    S denom = r2 + 1.0;
    std::vector<S> y;
    y.push_back(2.0 * x[0] / denom);
    y.push_back(2.0 * x[1] / denom);
    y.push_back(sign * ((r2 - 1.0) / denom));
    return padded(std::move(y), ambient_dim);
  };
  return SmoothMap(2, ambient_dim, body);
}

SmoothMap nodal_cubic_chart(int ambient_dim) {
  auto body = [ambient_dim](const auto& x) {
    using S = std::decay_t<decltype(x[0])>;
    std::vector<S> y;
    y.push_back(x[0] * x[0] - 1.0);
    y.push_back(x[0] * x[0] * x[0] - x[0]);
    return padded(std::move(y), ambient_dim);
  };
  return SmoothMap(1, ambient_dim, body);
}

// Two turns with unit-scale radii, so quadratic outer maps do not dwarf the
// linear perturbation terms.
SmoothMap spiral_chart(int ambient_dim) {
  auto body = [ambient_dim](const auto& x) {
    using S = std::decay_t<decltype(x[0])>;
    S radius = 0.25 + 0.1 * x[0];
    std::vector<S> y;
    y.push_back(radius * cos(x[0]));
    y.push_back(radius * sin(x[0]));
    return padded(std::move(y), ambient_dim);
  };
  return SmoothMap(1, ambient_dim, body);
}

/// t -> (t^2, t^4): the pairs (-t, t) share an image with parallel tangents,
/// so every double point violates the crossing condition.
SmoothMap tangency_chart(int ambient_dim) {
  auto body = [ambient_dim](const auto& x) {
    using S = std::decay_t<decltype(x[0])>;
    S t2 = x[0] * x[0];
    std::vector<S> y;
    y.push_back(t2);
    y.push_back(t2 * t2);
    return padded(std::move(y), ambient_dim);
  };
  return SmoothMap(1, ambient_dim, body);
}

}  // namespace

ChartedManifold chart_atlas(ManifoldKind kind, int ambient_dim) {
  ChartedManifold n;
  n.ambient_dim = ambient_dim;
  switch (kind) {
    case ManifoldKind::circle:
      if (ambient_dim < 2) throw BadDimension("circle needs ambient >= 2");
      n.intrinsic_dim = 1;
      n.charts.push_back({interval(-kPi, kPi), circle_chart(ambient_dim)});
      n.charts.push_back({interval(0.0, 2.0 * kPi), circle_chart(ambient_dim)});
      n.declared_immersion = true;
      n.declared_injective = true;
      n.sample_density = 64;
      break;
    case ManifoldKind::sphere2:
      if (ambient_dim < 3) throw BadDimension("sphere2 needs ambient >= 3");
      n.intrinsic_dim = 2;
      n.charts.push_back({square(-2.0, 2.0), sphere_chart(ambient_dim, +1.0)});
      n.charts.push_back({square(-2.0, 2.0), sphere_chart(ambient_dim, -1.0)});
      n.declared_immersion = true;
      n.declared_injective = true;
      n.sample_density = 12;
      break;
    case ManifoldKind::nodal_cubic:
      if (ambient_dim < 2) throw BadDimension("nodal_cubic needs ambient >= 2");
      n.intrinsic_dim = 1;
      n.charts.push_back({interval(-2.0, 2.0), nodal_cubic_chart(ambient_dim)});
      n.declared_immersion = true;
      n.declared_injective = false;  // t = -1 and t = 1 share the image (0,0)
      n.sample_density = 64;
      break;
    case ManifoldKind::spiral:
      if (ambient_dim < 2) throw BadDimension("spiral needs ambient >= 2");
      n.intrinsic_dim = 1;
      n.charts.push_back({interval(0.0, 4.0 * kPi), spiral_chart(ambient_dim)});
      n.declared_immersion = true;
      n.declared_injective = true;
      n.sample_density = 96;
      break;
    case ManifoldKind::tangency_curve:
      if (ambient_dim < 2) {
        throw BadDimension("tangency_curve needs ambient >= 2");
      }
      n.intrinsic_dim = 1;
      n.charts.push_back({interval(-1.6, 1.6), tangency_chart(ambient_dim)});
      n.declared_immersion = false;  // derivative vanishes at t = 0
      n.declared_injective = false;
      n.sample_density = 64;
      break;
  }
  return n;
}

ChartedManifold graph_curve(const SmoothMap& h, const Box& box) {
  if (h.domain_dim() != 1 || box.dim() != 1) {
    throw BadDimension("graph_curve expects a one-parameter map and box");
  }
  const int ambient = 1 + h.codomain_dim();
  auto body = [h](const auto& x) {
    auto tail = h.apply_body(x);
    std::decay_t<decltype(tail)> y;
    y.reserve(tail.size() + 1);
    y.push_back(x[0]);
    for (auto& v : tail) y.push_back(std::move(v));
    return y;
  };
  ChartedManifold n;
  n.intrinsic_dim = 1;
  n.ambient_dim = ambient;
  n.charts.push_back({box, SmoothMap(1, ambient, body)});
  n.declared_immersion = true;
  n.declared_injective = true;
  n.sample_density = 64;
  return n;
}

ChartedMap compose_over_atlas(const SmoothMap& f, const ChartedManifold& n,
                              int guard_check_density) {
  if (f.domain_dim() != n.ambient_dim) {
    throw DimensionMismatch("outer map expects R^" +
                            std::to_string(f.domain_dim()) +
                            ", manifold lives in R^" +
                            std::to_string(n.ambient_dim));
  }
  ChartedMap out;
  out.manifold = n;
  out.codomain_dim = f.codomain_dim();
  for (size_t c = 0; c < n.charts.size(); ++c) {
    for (const auto& t : n.charts[c].box.grid(guard_check_density)) {
      if (!f.in_domain(n.charts[c].map.evaluate(t))) {
        throw DomainViolation("image of chart " + std::to_string(c) +
                              " leaves the outer map's domain at a sample");
      }
    }
    out.maps.push_back(compose(f, n.charts[c].map));
  }
  return out;
}

}  // namespace plab
