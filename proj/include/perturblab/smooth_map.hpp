#pragma once

#include <Eigen/Dense>
#include <functional>
#include <type_traits>
#include <utility>
#include <vector>

#include "perturblab/dual.hpp"
#include "perturblab/errors.hpp"

namespace plab {

/// Throws DomainViolation if the vector has NaN or infinite entries.
void require_finite(const Eigen::VectorXd& x, const char* what);

/// An evaluable map from an open subset U of R^m into R^l with exact first
/// and second derivatives obtained from a single second-order dual pass.
///
/// The body is stored twice, once over plain doubles and once over Dual2, so
/// one generic callable supplies both evaluation and differentiation.
/// Evaluation outside the domain guard is always an error, never a value.
/// Instances are immutable after construction and safe to share across
/// threads.
class SmoothMap {
 public:
  using Guard = std::function<bool(const Eigen::VectorXd&)>;
  using ScalarBody =
      std::function<std::vector<double>(const std::vector<double>&)>;
  using DualBody = std::function<std::vector<Dual2>(const std::vector<Dual2>&)>;

  SmoothMap(int domain_dim, int codomain_dim, ScalarBody scalar_body,
            DualBody dual_body, Guard guard = {});

  template <class Body,
            class = std::enable_if_t<
                std::is_invocable_v<Body, const std::vector<double>&> &&
                std::is_invocable_v<Body, const std::vector<Dual2>&>>>
  SmoothMap(int domain_dim, int codomain_dim, Body body, Guard guard = {})
      : SmoothMap(domain_dim, codomain_dim, ScalarBody(body), DualBody(body),
                  std::move(guard)) {}

  int domain_dim() const { return m_; }
  int codomain_dim() const { return l_; }

  bool in_domain(const Eigen::VectorXd& x) const;

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;
  std::vector<Eigen::MatrixXd> hessian_tensor(const Eigen::VectorXd& x) const;

  /// Value, l x m Jacobian and the l Hessian slices in one pass.
  struct Jet2 {
    Eigen::VectorXd value;
    Eigen::MatrixXd jac;
    std::vector<Eigen::MatrixXd> hess;
  };
  Jet2 eval_jet2(const Eigen::VectorXd& x) const;

  /// Raw body access for combinators (perturb, compose); no guard checks.
  std::vector<double> apply_body(const std::vector<double>& x) const {
    return scalar_body_(x);
  }
  std::vector<Dual2> apply_body(const std::vector<Dual2>& x) const {
    return dual_body_(x);
  }

 private:
  void check_point(const Eigen::VectorXd& x) const;

  int m_ = 0;
  int l_ = 0;
  ScalarBody scalar_body_;
  DualBody dual_body_;
  Guard guard_;  // empty means all of R^m
};

}  // namespace plab
