#pragma once

#include <Eigen/Dense>
#include <vector>

#include "perturblab/errors.hpp"

namespace plab {

/// Open axis-aligned box; the parameter domain of one chart.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(const Eigen::VectorXd& x, double margin = 0.0) const {
    if (x.size() != lo.size()) return false;
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      if (x(i) <= lo(i) + margin || x(i) >= hi(i) - margin) return false;
    }
    return true;
  }

  /// Clamp into the interior, keeping a fraction of each extent as margin.
  Eigen::VectorXd clamp_interior(const Eigen::VectorXd& x,
                                 double margin_fraction = 1e-3) const {
    Eigen::VectorXd y = x;
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      const double margin = margin_fraction * (hi(i) - lo(i));
      if (y(i) < lo(i) + margin) y(i) = lo(i) + margin;
      if (y(i) > hi(i) - margin) y(i) = hi(i) - margin;
    }
    return y;
  }

  /// Regular grid of points_per_axis^dim samples, strictly interior
  /// (cell-centered so open-box semantics hold at any density).
  std::vector<Eigen::VectorXd> grid(int points_per_axis) const {
    if (points_per_axis < 1) throw BadDimension("grid density must be >= 1");
    const int d = dim();
    std::vector<Eigen::VectorXd> out;
    std::vector<int> idx(d, 0);
    const auto total = [&] {
      long t = 1;
      for (int i = 0; i < d; ++i) t *= points_per_axis;
      return t;
    }();
    out.reserve(static_cast<size_t>(total));
    for (long k = 0; k < total; ++k) {
      Eigen::VectorXd x(d);
      for (int i = 0; i < d; ++i) {
        x(i) = lo(i) + (idx[i] + 0.5) * (hi(i) - lo(i)) / points_per_axis;
      }
      out.push_back(std::move(x));
      for (int i = 0; i < d; ++i) {
        if (++idx[i] < points_per_axis) break;
        idx[i] = 0;
      }
    }
    return out;
  }

  double max_extent() const { return (hi - lo).maxCoeff(); }
};

}  // namespace plab
