#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

namespace plab {

inline constexpr double kDefaultRankTol = 1e-8;

struct SvdResult {
  Eigen::VectorXd singular_values;  // descending
  Eigen::MatrixXd u;                // full
  Eigen::MatrixXd v;                // full
};

inline SvdResult full_svd(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU |
                                               Eigen::ComputeFullV);
  return {svd.singularValues(), svd.matrixU(), svd.matrixV()};
}

/// A singular value counts as nonzero iff sigma > tol * max(sigma_max, 1).
/// The max with 1 keeps the threshold meaningful for the zero matrix.
inline int numerical_rank(const Eigen::VectorXd& singular_values,
                          double tol = kDefaultRankTol) {
  if (singular_values.size() == 0) return 0;
  const double cutoff = tol * std::max(singular_values(0), 1.0);
  int r = 0;
  for (Eigen::Index i = 0; i < singular_values.size(); ++i) {
    if (singular_values(i) > cutoff) ++r;
  }
  return r;
}

inline int numerical_rank(const Eigen::MatrixXd& a,
                          double tol = kDefaultRankTol) {
  if (a.rows() == 0 || a.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  return numerical_rank(svd.singularValues(), tol);
}

/// k-th largest singular value (1-based); zero when k exceeds min(rows,cols).
inline double kth_singular_value(const Eigen::MatrixXd& a, int k) {
  if (k < 1) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  if (k > sv.size()) return 0.0;
  return sv(k - 1);
}

/// All k-element subsets of {0, ..., n-1} in lexicographic order.
inline std::vector<std::vector<int>> k_subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  if (k < 0 || k > n) return out;
  if (k == 0) return {{}};
  std::vector<int> pick(k);
  for (int i = 0; i < k; ++i) pick[i] = i;
  while (true) {
    out.push_back(pick);
    int i = k - 1;
    while (i >= 0 && pick[i] == n - k + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
  return out;
}

/// Dimension of the affine hull of a point set, via the rank of the
/// difference matrix against the first point.
inline int affine_rank(const std::vector<Eigen::VectorXd>& points,
                       double tol = kDefaultRankTol) {
  if (points.size() < 2) return 0;
  Eigen::MatrixXd d(points.size() - 1, points[0].size());
  for (size_t i = 1; i < points.size(); ++i) {
    d.row(static_cast<Eigen::Index>(i - 1)) =
        (points[i] - points[0]).transpose();
  }
  return numerical_rank(d, tol);
}

}  // namespace plab
