#pragma once

// Shared test utilities. The finite-difference oracles here are deliberately
// independent of the dual-number machinery they are used to check.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "perturblab/rng.hpp"
#include "perturblab/smooth_map.hpp"

namespace plab::testing {

/// Scale-aware relative error: |a - b| / max(1, |a|, |b|).
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline Eigen::MatrixXd jacobian_fd(const SmoothMap& f, const Eigen::VectorXd& x,
                                   double h = 1e-4) {
  const int m = f.domain_dim();
  const int l = f.codomain_dim();
  Eigen::MatrixXd j(l, m);
  for (int a = 0; a < m; ++a) {
    Eigen::VectorXd hi = x, lo = x;
    hi(a) += h;
    lo(a) -= h;
    j.col(a) = (f.evaluate(hi) - f.evaluate(lo)) / (2.0 * h);
  }
  return j;
}

inline std::vector<Eigen::MatrixXd> hessian_fd(const SmoothMap& f,
                                               const Eigen::VectorXd& x,
                                               double h = 1e-4) {
  const int m = f.domain_dim();
  const int l = f.codomain_dim();
  std::vector<Eigen::MatrixXd> hess(l, Eigen::MatrixXd(m, m));
  const Eigen::VectorXd f0 = f.evaluate(x);
  for (int a = 0; a < m; ++a) {
    for (int b = a; b < m; ++b) {
      Eigen::VectorXd second(l);
      if (a == b) {
        Eigen::VectorXd hi = x, lo = x;
        hi(a) += h;
        lo(a) -= h;
        second = (f.evaluate(hi) - 2.0 * f0 + f.evaluate(lo)) / (h * h);
      } else {
        Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
        pp(a) += h; pp(b) += h;
        pm(a) += h; pm(b) -= h;
        mp(a) -= h; mp(b) += h;
        mm(a) -= h; mm(b) -= h;
        second = (f.evaluate(pp) - f.evaluate(pm) - f.evaluate(mp) +
                  f.evaluate(mm)) /
                 (4.0 * h * h);
      }
      for (int i = 0; i < l; ++i) {
        hess[i](a, b) = second(i);
        hess[i](b, a) = second(i);
      }
    }
  }
  return hess;
}

/// A random polynomial map of total degree <= 3 with a handful of terms per
/// component; coefficients in [-2, 2].
struct PolynomialTerm {
  double coef;
  std::vector<int> exponents;  // one per input, sum <= 3
};

struct RandomPolynomialMap {
  int m = 0;
  int l = 0;
  std::vector<std::vector<PolynomialTerm>> components;

  SmoothMap map() const {
    const auto comps = components;
    const int cod = l;
    auto body = [comps, cod](const auto& x) {
      using S = std::decay_t<decltype(x[0])>;
      std::vector<S> y;
      y.reserve(static_cast<size_t>(cod));
      for (const auto& terms : comps) {
        S acc = S(0.0);
        for (const auto& term : terms) {
          S prod = S(term.coef);
          for (size_t j = 0; j < term.exponents.size(); ++j) {
            for (int e = 0; e < term.exponents[j]; ++e) prod = prod * x[j];
          }
          acc = acc + prod;
        }
        y.push_back(acc);
      }
      return y;
    };
    return SmoothMap(m, cod, body);
  }
};

inline RandomPolynomialMap random_polynomial(Rng& rng, int m, int l,
                                             int terms_per_component = 5) {
  RandomPolynomialMap p;
  p.m = m;
  p.l = l;
  p.components.resize(l);
  for (auto& comp : p.components) {
    for (int t = 0; t < terms_per_component; ++t) {
      PolynomialTerm term;
      term.coef = rng.uniform(-2.0, 2.0);
      term.exponents.assign(m, 0);
      int degree = static_cast<int>(rng.index(4));  // 0..3
      while (degree-- > 0) {
        term.exponents[static_cast<size_t>(rng.index(m))] += 1;
      }
      comp.push_back(std::move(term));
    }
  }
  return p;
}

inline Eigen::VectorXd vec(std::initializer_list<double> entries) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(entries.size()));
  Eigen::Index i = 0;
  for (double e : entries) v(i++) = e;
  return v;
}

}  // namespace plab::testing
