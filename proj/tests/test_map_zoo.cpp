#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "perturblab/linalg.hpp"
#include "perturblab/map_zoo.hpp"
#include "test_support.hpp"

using namespace plab;
using plab::testing::random_polynomial;
using plab::testing::vec;

namespace {

SmoothMap square1() {
  return SmoothMap(1, 1, [](const auto& x) {
    using S = std::decay_t<decltype(x[0])>;
    return std::vector<S>{x[0] * x[0]};
  });
}

SmoothMap zero_map(int m, int l) {
  return SmoothMap(m, l, [l](const auto& x) {
    using S = std::decay_t<decltype(x[0])>;
    (void)x;
    return std::vector<S>(static_cast<size_t>(l), S(0.0));
  });
}

}  // namespace

TEST_CASE("perturb") {
  SUBCASE("zero perturbation is the identity transformation") {
    Rng rng(1);
    const SmoothMap f = random_polynomial(rng, 3, 2).map();
    const SmoothMap fp = perturb(f, LinearPerturbation::zero(2, 3));
    for (int i = 0; i < 10; ++i) {
      Eigen::VectorXd x(3);
      x << rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1);
      CHECK(fp.evaluate(x) == f.evaluate(x));
    }
  }

  SUBCASE("zero base plus pi is the linear map") {
    Eigen::MatrixXd a(2, 2);
    a << 1, 2, 3, 4;
    const SmoothMap fp = perturb(zero_map(2, 2), LinearPerturbation(a));
    const Eigen::VectorXd x = vec({5, -1});
    CHECK(fp.evaluate(x).isApprox(a * x, 1e-15));
  }

  SUBCASE("x^2 with alpha = 3 at x = 1") {
    Eigen::MatrixXd a(1, 1);
    a << 3;
    CHECK(perturb(square1(), LinearPerturbation(a)).evaluate(vec({1}))(0) ==
          doctest::Approx(4.0));
  }

  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(perturb(square1(), LinearPerturbation::zero(2, 1)),
                    DimensionMismatch);
  }

  SUBCASE("affine in pi, exactly on integer data") {
    Rng rng(7);
    auto body = [](const auto& x) {
      using S = std::decay_t<decltype(x[0])>;
      return std::vector<S>{x[0] * x[1], x[0] + x[1]};
    };
    const SmoothMap f(2, 2, body);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::MatrixXd a1(2, 2), a2(2, 2);
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          a1(i, j) = std::floor(rng.uniform(-4, 4));
          a2(i, j) = std::floor(rng.uniform(-4, 4));
        }
      }
      const Eigen::VectorXd x = vec({std::floor(rng.uniform(-3, 3)),
                                     std::floor(rng.uniform(-3, 3))});
      const Eigen::VectorXd lhs =
          perturb(f, LinearPerturbation(a1 + a2)).evaluate(x);
      const Eigen::VectorXd rhs =
          perturb(f, LinearPerturbation(a1)).evaluate(x) + a2 * x;
      CHECK(lhs == rhs);
    }
  }

  SUBCASE("jacobian gains exactly alpha, hessian untouched") {
    Rng rng(9);
    const SmoothMap f = random_polynomial(rng, 3, 2).map();
    const Eigen::MatrixXd a = rng.gaussian_matrix(2, 3, 1.0);
    const SmoothMap fp = perturb(f, LinearPerturbation(a));
    const Eigen::VectorXd x = vec({0.3, -0.7, 1.1});
    const auto jet = f.eval_jet2(x);
    const auto jetp = fp.eval_jet2(x);
    CHECK(jetp.jac == Eigen::MatrixXd(jet.jac + a));
    for (int i = 0; i < 2; ++i) CHECK(jetp.hess[i] == jet.hess[i]);
  }
}

TEST_CASE("compose") {
  SUBCASE("identity outer map") {
    const ChartedManifold circle = chart_atlas(ManifoldKind::circle, 2);
    const SmoothMap id2 = SmoothMap(2, 2, [](const auto& x) {
      using S = std::decay_t<decltype(x[0])>;
      return std::vector<S>(x.begin(), x.end());
    });
    const SmoothMap c = compose(id2, circle.charts[0].map);
    CHECK(c.evaluate(vec({0.7})).isApprox(
        circle.charts[0].map.evaluate(vec({0.7})), 1e-15));
  }

  SUBCASE("sum of squares on the unit circle is constant 1") {
    const ChartedManifold circle = chart_atlas(ManifoldKind::circle, 2);
    auto body = [](const auto& x) {
      using S = std::decay_t<decltype(x[0])>;
      return std::vector<S>{x[0] * x[0] + x[1] * x[1]};
    };
    const SmoothMap c = compose(SmoothMap(2, 1, body), circle.charts[0].map);
    for (double t : {-2.0, -0.5, 0.0, 1.3}) {
      CHECK(c.evaluate(vec({t}))(0) == doctest::Approx(1.0).epsilon(1e-14));
    }
  }

  SUBCASE("(x-2)^2 + y^2 on the circle is 5 - 4 cos t") {
    const ChartedManifold circle = chart_atlas(ManifoldKind::circle, 2);
    auto body = [](const auto& x) {
      using S = std::decay_t<decltype(x[0])>;
      S d = x[0] - 2.0;
      return std::vector<S>{d * d + x[1] * x[1]};
    };
    const SmoothMap c = compose(SmoothMap(2, 1, body), circle.charts[0].map);
    for (double t : {-3.0, -1.0, 0.0, 0.4, 2.2}) {
      CHECK(c.evaluate(vec({t}))(0) ==
            doctest::Approx(5.0 - 4.0 * std::cos(t)).epsilon(1e-14));
    }
  }

  SUBCASE("dimension mismatch") {
    const ChartedManifold circle = chart_atlas(ManifoldKind::circle, 2);
    CHECK_THROWS_AS(compose(square1(), circle.charts[0].map),
                    DimensionMismatch);
  }
}

TEST_CASE("make_gdsm") {
  SUBCASE("basic value") {
    GdsmSpec spec = distance_squared_spec(Eigen::MatrixXd::Zero(1, 2));
    CHECK(make_gdsm(spec).evaluate(vec({1, 1}))(0) == doctest::Approx(2.0));
  }

  SUBCASE("components vanish at their centers") {
    Eigen::MatrixXd p(2, 2);
    p << 1, 2, -3, 0.5;
    const SmoothMap d = make_gdsm(distance_squared_spec(p));
    CHECK(d.evaluate(p.row(0).transpose())(0) == doctest::Approx(0.0));
    CHECK(d.evaluate(p.row(1).transpose())(1) == doctest::Approx(0.0));
  }

  SUBCASE("lorentzian signature cancels on the light cone") {
    Eigen::MatrixXd p(2, 2);
    p << 1, -2, 0, 0;
    const SmoothMap lp = make_gdsm(lorentzian_spec(p));
    const Eigen::VectorXd x = p.row(0).transpose() + vec({1, 1});
    CHECK(lp.evaluate(x)(0) == doctest::Approx(0.0));
  }

  SUBCASE("general variant rejects zero coefficients") {
    GdsmSpec spec;
    spec.centers = Eigen::MatrixXd::Zero(1, 2);
    spec.coeffs = Eigen::MatrixXd::Ones(1, 2);
    spec.coeffs(0, 1) = 0.0;
    spec.variant = GdsmVariant::general;
    CHECK_THROWS_AS(make_gdsm(spec), InvalidSpec);
  }
}

TEST_CASE("psi between central points and perturbations") {
  SUBCASE("1x1 example") {
    GdsmSpec spec;
    spec.coeffs = Eigen::MatrixXd::Constant(1, 1, 3.0);
    spec.centers = Eigen::MatrixXd::Constant(1, 1, 2.0);
    spec.variant = GdsmVariant::general;
    CHECK(psi_central_to_linear(spec).matrix(0, 0) == doctest::Approx(-12.0));
  }

  SUBCASE("zero centers map to the zero perturbation") {
    GdsmSpec spec = distance_squared_spec(Eigen::MatrixXd::Zero(2, 3));
    CHECK(psi_central_to_linear(spec).matrix.norm() == 0.0);
  }

  SUBCASE("round trip to 1e-12") {
    Rng rng(55);
    for (int trial = 0; trial < 50; ++trial) {
      GdsmSpec spec;
      spec.coeffs = Eigen::MatrixXd(2, 3);
      spec.centers = Eigen::MatrixXd(2, 3);
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 3; ++j) {
          spec.coeffs(i, j) = rng.uniform(0.5, 2.0);
          spec.centers(i, j) = rng.uniform(0.5, 2.0);
        }
      }
      spec.variant = GdsmVariant::general;
      const Eigen::MatrixXd back =
          psi_linear_to_central(psi_central_to_linear(spec), spec.coeffs);
      CHECK((back - spec.centers).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  SUBCASE("zero coefficient is not invertible") {
    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, 1);
    CHECK_THROWS_AS(
        psi_linear_to_central(LinearPerturbation(Eigen::MatrixXd::Ones(1, 1)),
                              zero),
        InvalidSpec);
  }
}

TEST_CASE("normal forms") {
  SUBCASE("whitney umbrella at the origin") {
    const SmoothMap wu = normal_form(NormalFormKind::whitney_umbrella, 2);
    CHECK(wu.codomain_dim() == 3);
    CHECK(wu.evaluate(vec({0, 0})).norm() == 0.0);
    const Eigen::MatrixXd j = wu.jacobian(vec({0, 0}));
    CHECK(Eigen::JacobiSVD<Eigen::MatrixXd>(j).singularValues()(0) > 0);
    CHECK(numerical_rank(j) == 1);

    Eigen::MatrixXd expected(3, 2);
    expected << 0, 0, 1, 0, 0, 1;
    CHECK(wu.jacobian(vec({0, 1})).isApprox(expected, 1e-14));
  }

  SUBCASE("fold") {
    const SmoothMap fold = normal_form(NormalFormKind::fold, 1);
    CHECK(fold.jacobian(vec({0}))(0, 0) == 0.0);
    CHECK(fold.evaluate(vec({3}))(0) == doctest::Approx(9.0));
  }

  SUBCASE("inclusion") {
    const SmoothMap inc = normal_form(NormalFormKind::inclusion, 1, 3);
    CHECK(inc.evaluate(vec({5})).isApprox(vec({5, 0, 0}), 1e-15));
  }

  SUBCASE("bad kinds and dimensions") {
    CHECK_THROWS_AS(normal_form_kind_from_name("cusp"), UnknownKind);
    CHECK_THROWS_AS(normal_form(NormalFormKind::whitney_umbrella, 1),
                    BadDimension);
    CHECK_THROWS_AS(normal_form(NormalFormKind::inclusion, 3, 2),
                    BadDimension);
  }
}

TEST_CASE("chart atlases") {
  SUBCASE("circle samples satisfy the defining equation") {
    const ChartedManifold circle = chart_atlas(ManifoldKind::circle, 2);
    circle.validate();
    for (const auto& gp : circle.sample_grid(32)) {
      CHECK(gp.image.squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  SUBCASE("sphere chart jacobians stay well conditioned") {
    const ChartedManifold sphere = chart_atlas(ManifoldKind::sphere2, 3);
    sphere.validate();
    double min_sv = 1e9;
    for (const auto& gp : sphere.sample_grid(9)) {
      min_sv = std::min(min_sv, kth_singular_value(
                                    sphere.charts[gp.chart].map.jacobian(
                                        gp.param),
                                    2));
      CHECK(gp.image.squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(min_sv > 0.1);
  }

  SUBCASE("nodal cubic has the node") {
    const ChartedManifold nodal = chart_atlas(ManifoldKind::nodal_cubic, 2);
    nodal.validate();
    CHECK(nodal.charts[0].map.evaluate(vec({-1})).norm() ==
          doctest::Approx(0.0));
    CHECK(nodal.charts[0].map.evaluate(vec({1})).norm() ==
          doctest::Approx(0.0));
    CHECK_FALSE(nodal.declared_injective);
  }

  SUBCASE("tangency curve pairs +-t coincide") {
    const ChartedManifold tc = chart_atlas(ManifoldKind::tangency_curve, 2);
    CHECK(tc.charts[0].map.evaluate(vec({1.2})).isApprox(
        tc.charts[0].map.evaluate(vec({-1.2})), 1e-15));
  }

  SUBCASE("spiral is a validated injective immersion") {
    chart_atlas(ManifoldKind::spiral, 2).validate();
  }

  SUBCASE("ambient too small") {
    CHECK_THROWS_AS(chart_atlas(ManifoldKind::circle, 1), BadDimension);
    CHECK_THROWS_AS(chart_atlas(ManifoldKind::sphere2, 2), BadDimension);
  }

  SUBCASE("declared flags are grid-checked") {
    // Odd density puts t = 0 on the grid, where the derivative vanishes.
    ChartedManifold not_immersed = chart_atlas(ManifoldKind::tangency_curve, 2);
    not_immersed.declared_immersion = true;
    not_immersed.sample_density = 65;
    CHECK_THROWS_AS(not_immersed.validate(), InvalidSpec);

    // The symmetric grid contains pairs (-t, t) with exactly equal images.
    ChartedManifold not_injective = chart_atlas(ManifoldKind::tangency_curve, 2);
    not_injective.declared_injective = true;
    CHECK_THROWS_AS(not_injective.validate(), InvalidSpec);
  }

  SUBCASE("padding into higher ambient dimension") {
    const ChartedManifold c4 = chart_atlas(ManifoldKind::circle, 4);
    c4.validate();
    const Eigen::VectorXd y = c4.charts[0].map.evaluate(vec({0.3}));
    CHECK(y.size() == 4);
    CHECK(y(2) == 0.0);
    CHECK(y(3) == 0.0);
  }
}

TEST_CASE("graph curve") {
  const SmoothMap h = SmoothMap(1, 2, [](const auto& x) {
    using S = std::decay_t<decltype(x[0])>;
    return std::vector<S>{x[0] * x[0], sin(x[0])};
  });
  Box box;
  box.lo = vec({-1});
  box.hi = vec({1});
  const ChartedManifold g = graph_curve(h, box);
  g.validate();
  CHECK(g.ambient_dim == 3);
  CHECK(g.charts[0].map.evaluate(vec({0.5})).isApprox(
      vec({0.5, 0.25, std::sin(0.5)}), 1e-14));
}

TEST_CASE("compose over atlas") {
  const ChartedManifold circle = chart_atlas(ManifoldKind::circle, 2);

  SUBCASE("codomain bookkeeping") {
    const SmoothMap f = gdsm_quadratic_part(Eigen::MatrixXd::Ones(3, 2));
    const ChartedMap g = compose_over_atlas(f, circle);
    CHECK(g.codomain_dim == 3);
    CHECK(g.maps.size() == circle.charts.size());
  }

  SUBCASE("guard violations surface at the sample check") {
    auto body = [](const auto& x) {
      using S = std::decay_t<decltype(x[0])>;
      return std::vector<S>{x[0]};
    };
    const SmoothMap restricted(
        2, 1, body, [](const Eigen::VectorXd& x) { return x(0) > 0.5; });
    CHECK_THROWS_AS(compose_over_atlas(restricted, circle), DomainViolation);
  }
}
