#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "perturblab/map_zoo.hpp"
#include "perturblab/smooth_map.hpp"
#include "test_support.hpp"

using namespace plab;
using plab::testing::hessian_fd;
using plab::testing::jacobian_fd;
using plab::testing::random_polynomial;
using plab::testing::rel_err;
using plab::testing::vec;

namespace {

SmoothMap abs_restricted() {
  auto body = [](const auto& x) {
    using S = std::decay_t<decltype(x[0])>;
    return std::vector<S>{abs(x[0])};
  };
  return SmoothMap(1, 1, body,
                   [](const Eigen::VectorXd& x) { return x(0) != 0.0; });
}

SmoothMap identity2() {
  auto body = [](const auto& x) {
    using S = std::decay_t<decltype(x[0])>;
    return std::vector<S>(x.begin(), x.end());
  };
  return SmoothMap(2, 2, body);
}

SmoothMap sum_of_squares2() {
  auto body = [](const auto& x) {
    using S = std::decay_t<decltype(x[0])>;
    return std::vector<S>{x[0] * x[0] + x[1] * x[1]};
  };
  return SmoothMap(2, 1, body);
}

}  // namespace

TEST_CASE("evaluate basics") {
  CHECK(identity2().evaluate(vec({3, 4})).isApprox(vec({3, 4})));
  CHECK(sum_of_squares2().evaluate(vec({1, 1}))(0) == doctest::Approx(2.0));

  // |x| on R \ {0}: the guard rejects the puncture.
  const SmoothMap f = abs_restricted();
  CHECK(f.evaluate(vec({-2}))(0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(f.evaluate(vec({0})), DomainViolation);

  CHECK_THROWS_AS(identity2().evaluate(vec({1})), DimensionMismatch);
  Eigen::VectorXd bad = vec({1, 2});
  bad(0) = std::nan("");
  CHECK_THROWS_AS(identity2().evaluate(bad), DomainViolation);
}

TEST_CASE("degenerate dimensions rejected at construction") {
  auto body = [](const auto& x) { return x; };
  CHECK_THROWS_AS(SmoothMap(0, 1, body), DimensionMismatch);
  CHECK_THROWS_AS(SmoothMap(1, 0, body), DimensionMismatch);
}

TEST_CASE("jacobian on known maps") {
  SUBCASE("linear map has constant jacobian") {
    Eigen::MatrixXd a(2, 3);
    a << 1, -2, 0.5, 3, 4, -1;
    auto body = [a](const auto& x) {
      using S = std::decay_t<decltype(x[0])>;
      std::vector<S> y;
      for (int i = 0; i < 2; ++i) {
        S acc = S(0.0);
        for (int j = 0; j < 3; ++j) acc = acc + a(i, j) * x[j];
        y.push_back(acc);
      }
      return y;
    };
    SmoothMap f(3, 2, body);
    CHECK(f.jacobian(vec({0.3, -1, 2})).isApprox(a, 1e-14));
  }

  SUBCASE("(x1^2, x1 x2) at (1,2)") {
    auto body = [](const auto& x) {
      using S = std::decay_t<decltype(x[0])>;
      return std::vector<S>{x[0] * x[0], x[0] * x[1]};
    };
    SmoothMap f(2, 2, body);
    Eigen::MatrixXd expected(2, 2);
    expected << 2, 0, 2, 1;
    CHECK(f.jacobian(vec({1, 2})).isApprox(expected, 1e-14));
  }

  SUBCASE("constant map has zero jacobian") {
    auto body = [](const auto& x) {
      using S = std::decay_t<decltype(x[0])>;
      (void)x;
      return std::vector<S>{S(7.0)};
    };
    SmoothMap f(3, 1, body);
    CHECK(f.jacobian(vec({1, 2, 3})).norm() == 0.0);
  }
}

TEST_CASE("hessian tensor on known maps") {
  SUBCASE("x1 x2 has the constant off-diagonal hessian") {
    auto body = [](const auto& x) {
      using S = std::decay_t<decltype(x[0])>;
      return std::vector<S>{x[0] * x[1]};
    };
    SmoothMap f(2, 1, body);
    Eigen::MatrixXd expected(2, 2);
    expected << 0, 1, 1, 0;
    CHECK(f.hessian_tensor(vec({3, -5}))[0].isApprox(expected, 1e-14));
  }

  SUBCASE("x^3 at x = 2") {
    auto body = [](const auto& x) {
      using S = std::decay_t<decltype(x[0])>;
      return std::vector<S>{x[0] * x[0] * x[0]};
    };
    SmoothMap f(1, 1, body);
    CHECK(f.hessian_tensor(vec({2}))[0](0, 0) == doctest::Approx(12.0));
    CHECK(rel_err(f.hessian_tensor(vec({2}))[0](0, 0),
                  hessian_fd(f, vec({2}))[0](0, 0)) < 1e-5);
  }

  SUBCASE("linear map has zero hessian") {
    auto body = [](const auto& x) {
      using S = std::decay_t<decltype(x[0])>;
      return std::vector<S>{x[0] - 2.0 * x[1]};
    };
    SmoothMap f(2, 1, body);
    for (const auto& h : f.hessian_tensor(vec({1, 1}))) CHECK(h.norm() == 0.0);
  }
}

TEST_CASE("AD matches central finite differences on random cubics") {
  Rng rng(20240901);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 1 + static_cast<int>(rng.index(5));
    const int l = 1 + static_cast<int>(rng.index(5));
    const SmoothMap f = random_polynomial(rng, m, l).map();
    Eigen::VectorXd x(m);
    for (int j = 0; j < m; ++j) x(j) = rng.uniform(-1.5, 1.5);

    const auto jet = f.eval_jet2(x);
    const Eigen::MatrixXd jfd = jacobian_fd(f, x);
    for (int i = 0; i < l; ++i) {
      for (int j = 0; j < m; ++j) {
        CHECK(rel_err(jet.jac(i, j), jfd(i, j)) < 1e-5);
      }
    }
    const auto hfd = hessian_fd(f, x);
    for (int i = 0; i < l; ++i) {
      for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
          CHECK(rel_err(jet.hess[i](a, b), hfd[i](a, b)) < 1e-5);
        }
      }
    }
  }
}

TEST_CASE("AD matches finite differences at large magnitudes") {
  // Values up to ~1e3: cubics over [-6, 6].
  Rng rng(20240902);
  for (int trial = 0; trial < 25; ++trial) {
    const int m = 1 + static_cast<int>(rng.index(4));
    const SmoothMap f = random_polynomial(rng, m, 2).map();
    Eigen::VectorXd x(m);
    for (int j = 0; j < m; ++j) x(j) = rng.uniform(-6.0, 6.0);
    const auto jet = f.eval_jet2(x);
    const Eigen::MatrixXd jfd = jacobian_fd(f, x);
    const auto hfd = hessian_fd(f, x);
    for (int i = 0; i < 2; ++i) {
      for (int a = 0; a < m; ++a) {
        CHECK(rel_err(jet.jac(i, a), jfd(i, a)) < 1e-5);
        for (int b = 0; b < m; ++b) {
          CHECK(rel_err(jet.hess[i](a, b), hfd[i](a, b)) < 1e-5);
        }
      }
    }
  }
}

TEST_CASE("hessians are exactly symmetric by construction") {
  Rng rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 2 + static_cast<int>(rng.index(4));
    // Include division and transcendental factors to stress every operator.
    auto body = [](const auto& x) {
      using S = std::decay_t<decltype(x[0])>;
      S a = x[0] * x[1] + sin(x[0]) * exp(x[1] * 0.3);
      S b = (x[0] + 2.5) / (x[1] * x[1] + 1.7);
      return std::vector<S>{a * b + sqrt(x[0] * x[0] + x[1] * x[1] + 1.0)};
    };
    SmoothMap f(m, 1, [body](const auto& x) { return body(x); });
    Eigen::VectorXd x(m);
    for (int j = 0; j < m; ++j) x(j) = rng.uniform(-2.0, 2.0);
    for (const auto& h : f.hessian_tensor(x)) {
      worst = std::max(worst, (h - h.transpose()).cwiseAbs().maxCoeff());
    }
  }
  CHECK(worst <= 1e-12);
  CHECK(worst == 0.0);  // construction keeps the pairs bitwise equal
}

TEST_CASE("chain rule through compose") {
  Rng rng(4242);
  for (int trial = 0; trial < 20; ++trial) {
    const SmoothMap inner = random_polynomial(rng, 2, 3).map();
    const SmoothMap outer = random_polynomial(rng, 3, 2).map();
    const SmoothMap both = compose(outer, inner);
    Eigen::VectorXd t(2);
    t << rng.uniform(-1, 1), rng.uniform(-1, 1);
    const Eigen::MatrixXd lhs = both.jacobian(t);
    const Eigen::MatrixXd rhs =
        outer.jacobian(inner.evaluate(t)) * inner.jacobian(t);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("dual scalar edge cases") {
  // d/dx (x / x) = 0 away from 0
  const Dual2 x = Dual2::variable(3.0, 0, 1);
  const Dual2 q = x / x;
  CHECK(q.value() == doctest::Approx(1.0));
  CHECK(q.grad(1)(0) == doctest::Approx(0.0).epsilon(1e-14));

  const Dual2 p = pow(x, 2.5);
  CHECK(p.grad(1)(0) == doctest::Approx(2.5 * std::pow(3.0, 1.5)));
  CHECK(p.hess(1)(0, 0) == doctest::Approx(2.5 * 1.5 * std::pow(3.0, 0.5)));

  // abs at 0 yields NaN derivatives rather than a silent wrong value.
  const Dual2 z = abs(Dual2::variable(0.0, 0, 1));
  CHECK(std::isnan(z.grad(1)(0)));
}
