#include "perturblab/smooth_map.hpp"

#include <cmath>
#include <string>

namespace plab {

void require_finite(const Eigen::VectorXd& x, const char* what) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x(i))) {
      throw DomainViolation(std::string(what) + " has a non-finite entry");
    }
  }
}

SmoothMap::SmoothMap(int domain_dim, int codomain_dim, ScalarBody scalar_body,
                     DualBody dual_body, Guard guard)
    : m_(domain_dim),
      l_(codomain_dim),
      scalar_body_(std::move(scalar_body)),
      dual_body_(std::move(dual_body)),
      guard_(std::move(guard)) {
  if (m_ <= 0 || l_ <= 0) {
    throw DimensionMismatch("map dimensions must be positive, got " +
                            std::to_string(m_) + " -> " + std::to_string(l_));
  }
}

bool SmoothMap::in_domain(const Eigen::VectorXd& x) const {
  if (x.size() != m_) return false;
  return !guard_ || guard_(x);
}

void SmoothMap::check_point(const Eigen::VectorXd& x) const {
  if (x.size() != m_) {
    throw DimensionMismatch("point has dimension " + std::to_string(x.size()) +
                            ", map expects " + std::to_string(m_));
  }
  require_finite(x, "evaluation point");
  if (guard_ && !guard_(x)) {
    throw DomainViolation("point lies outside the map's domain");
  }
}

Eigen::VectorXd SmoothMap::evaluate(const Eigen::VectorXd& x) const {
  check_point(x);
  std::vector<double> xs(x.data(), x.data() + x.size());
  std::vector<double> ys = scalar_body_(xs);
  if (static_cast<int>(ys.size()) != l_) {
    throw DimensionMismatch("map body produced " + std::to_string(ys.size()) +
                            " components, expected " + std::to_string(l_));
  }
  return Eigen::Map<const Eigen::VectorXd>(ys.data(), l_);
}

SmoothMap::Jet2 SmoothMap::eval_jet2(const Eigen::VectorXd& x) const {
  check_point(x);
  std::vector<Dual2> xs;
  xs.reserve(m_);
  for (int j = 0; j < m_; ++j) xs.push_back(Dual2::variable(x(j), j, m_));
  std::vector<Dual2> ys = dual_body_(xs);
  if (static_cast<int>(ys.size()) != l_) {
    throw DimensionMismatch("map body produced " + std::to_string(ys.size()) +
                            " components, expected " + std::to_string(l_));
  }
  Jet2 out;
  out.value.resize(l_);
  out.jac.resize(l_, m_);
  out.hess.reserve(l_);
  for (int i = 0; i < l_; ++i) {
    out.value(i) = ys[i].value();
    out.jac.row(i) = ys[i].grad(m_).transpose();
    out.hess.push_back(ys[i].hess(m_));
  }
  return out;
}

Eigen::MatrixXd SmoothMap::jacobian(const Eigen::VectorXd& x) const {
  return eval_jet2(x).jac;
}

std::vector<Eigen::MatrixXd> SmoothMap::hessian_tensor(
    const Eigen::VectorXd& x) const {
  return eval_jet2(x).hess;
}

}  // namespace plab
