#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "perturblab/errors.hpp"

namespace plab {

/// Second-order forward-mode scalar: value, gradient and Hessian with respect
/// to the seeded input variables, propagated together in a single pass.
///
/// A Dual2 constructed from a plain double is a *constant*: its derivative
/// storage stays empty, which is read as "identically zero". Seeded variables
/// carry an n-vector gradient and an n x n Hessian. Arithmetic keeps Hessians
/// exactly symmetric (each (i,j)/(j,i) pair is assembled from the same
/// products in the same order), so downstream symmetry checks can demand
/// equality rather than a tolerance.
class Dual2 {
 public:
  Dual2() = default;
  Dual2(double value) : v_(value) {}  // NOLINT: implicit promotion of constants

  static Dual2 variable(double value, int index, int dim) {
    Dual2 d(value);
    d.g_ = Eigen::VectorXd::Zero(dim);
    d.g_(index) = 1.0;
    d.h_ = Eigen::MatrixXd::Zero(dim, dim);
    return d;
  }

  double value() const { return v_; }
  bool is_constant() const { return g_.size() == 0; }
  int dim() const { return static_cast<int>(g_.size()); }

  Eigen::VectorXd grad(int dim) const {
    return is_constant() ? Eigen::VectorXd::Zero(dim) : g_;
  }
  Eigen::MatrixXd hess(int dim) const {
    return is_constant() ? Eigen::MatrixXd::Zero(dim, dim) : h_;
  }

  Dual2 operator-() const {
    Dual2 r(-v_);
    if (!is_constant()) {
      r.g_ = -g_;
      r.h_ = -h_;
    }
    return r;
  }

  friend Dual2 operator+(const Dual2& a, const Dual2& b) {
    Dual2 r(a.v_ + b.v_);
    if (a.is_constant()) {
      r.g_ = b.g_;
      r.h_ = b.h_;
    } else if (b.is_constant()) {
      r.g_ = a.g_;
      r.h_ = a.h_;
    } else {
      r.g_ = a.g_ + b.g_;
      r.h_ = a.h_ + b.h_;
    }
    return r;
  }

  friend Dual2 operator-(const Dual2& a, const Dual2& b) { return a + (-b); }

  friend Dual2 operator*(const Dual2& a, const Dual2& b) {
    Dual2 r(a.v_ * b.v_);
    if (a.is_constant() && b.is_constant()) return r;
    if (a.is_constant()) {
      r.g_ = a.v_ * b.g_;
      r.h_ = a.v_ * b.h_;
    } else if (b.is_constant()) {
      r.g_ = b.v_ * a.g_;
      r.h_ = b.v_ * a.h_;
    } else {
      r.g_ = a.v_ * b.g_ + b.v_ * a.g_;
      // Two separately evaluated symmetric pieces keep the sum exactly
      // symmetric entry by entry.
      Eigen::MatrixXd curved = a.v_ * b.h_ + b.v_ * a.h_;
      Eigen::MatrixXd outer = a.g_ * b.g_.transpose() + b.g_ * a.g_.transpose();
      r.h_ = curved + outer;
    }
    return r;
  }

  friend Dual2 operator/(const Dual2& a, const Dual2& b) {
    if (b.is_constant()) return a * (1.0 / b.v_);
    return a * reciprocal(b);
  }

  Dual2& operator+=(const Dual2& o) { return *this = *this + o; }
  Dual2& operator-=(const Dual2& o) { return *this = *this - o; }
  Dual2& operator*=(const Dual2& o) { return *this = *this * o; }
  Dual2& operator/=(const Dual2& o) { return *this = *this / o; }

  /// Chain rule through a scalar function given f(v), f'(v), f''(v).
  static Dual2 compose_unary(const Dual2& u, double f, double fp, double fpp) {
    Dual2 r(f);
    if (!u.is_constant()) {
      r.g_ = fp * u.g_;
      // The outer product is materialized before scaling; folding the scalar
      // into one factor would round (i,j) and (j,i) differently.
      Eigen::MatrixXd outer = u.g_ * u.g_.transpose();
      r.h_ = fp * u.h_ + fpp * outer;
    }
    return r;
  }

 private:
  static Dual2 reciprocal(const Dual2& b) {
    const double inv = 1.0 / b.v_;
    return compose_unary(b, inv, -inv * inv, 2.0 * inv * inv * inv);
  }

  double v_ = 0.0;
  Eigen::VectorXd g_;  // empty means zero
  Eigen::MatrixXd h_;  // empty means zero
};

inline Dual2 sin(const Dual2& u) {
  return Dual2::compose_unary(u, std::sin(u.value()), std::cos(u.value()),
                              -std::sin(u.value()));
}
inline Dual2 cos(const Dual2& u) {
  return Dual2::compose_unary(u, std::cos(u.value()), -std::sin(u.value()),
                              -std::cos(u.value()));
}
inline Dual2 exp(const Dual2& u) {
  const double e = std::exp(u.value());
  return Dual2::compose_unary(u, e, e, e);
}
inline Dual2 log(const Dual2& u) {
  const double inv = 1.0 / u.value();
  return Dual2::compose_unary(u, std::log(u.value()), inv, -inv * inv);
}
inline Dual2 sqrt(const Dual2& u) {
  const double s = std::sqrt(u.value());
  return Dual2::compose_unary(u, s, 0.5 / s, -0.25 / (s * u.value()));
}
inline Dual2 pow(const Dual2& u, double p) {
  const double v = u.value();
  return Dual2::compose_unary(u, std::pow(v, p), p * std::pow(v, p - 1.0),
                              p * (p - 1.0) * std::pow(v, p - 2.0));
}
inline Dual2 abs(const Dual2& u) {
  // Not differentiable at 0; domain guards are expected to exclude it, so a
  // hit at exactly zero surfaces as NaN derivatives rather than a quiet wrong
  // answer.
  const double s = u.value() > 0.0  ? 1.0
                   : u.value() < 0.0 ? -1.0
                                     : std::numeric_limits<double>::quiet_NaN();
  return Dual2::compose_unary(u, std::abs(u.value()), s, 0.0);
}

using std::abs;
using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;

}  // namespace plab
