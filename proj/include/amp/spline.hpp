#pragma once

#include <algorithm>
#include <vector>

#include "amp/control_space.hpp"

namespace amp {

/// Natural cubic spline through path points, parametrized by cumulative
/// chord length. Straight paths stay straight with P'' = 0.
class GeometricPath {
public:
  GeometricPath() = default;

  /// knots: strictly increasing parameters; points: one column per knot.
  GeometricPath(std::vector<double> knots, const Eigen::MatrixXd& points)
      : knots_(std::move(knots)), a_(points) {
    const auto n = static_cast<Eigen::Index>(knots_.size());
    if (n < 2 || points.cols() != n) throw Error("spline needs at least two distinct knots");
    const Eigen::Index segs = n - 1;
    const Eigen::Index dim = points.rows();

    std::vector<double> h(static_cast<std::size_t>(segs));
    for (Eigen::Index i = 0; i < segs; ++i) h[i] = knots_[i + 1] - knots_[i];

    // Second derivatives m_i with m_0 = m_{n-1} = 0 (natural end conditions),
    // tridiagonal system solved by the Thomas algorithm.
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, n);
    if (n > 2) {
      const Eigen::Index k = n - 2;
      std::vector<double> diag(k), upper(k), lower(k);
      Eigen::MatrixXd rhs(dim, k);
      for (Eigen::Index i = 0; i < k; ++i) {
        diag[i] = 2.0 * (h[i] + h[i + 1]);
        upper[i] = h[i + 1];
        lower[i] = h[i];
        rhs.col(i) = 6.0 * ((points.col(i + 2) - points.col(i + 1)) / h[i + 1] -
                            (points.col(i + 1) - points.col(i)) / h[i]);
      }
      for (Eigen::Index i = 1; i < k; ++i) {
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs.col(i) -= w * rhs.col(i - 1);
      }
      m.col(k) = rhs.col(k - 1) / diag[k - 1];
      for (Eigen::Index i = k - 2; i >= 0; --i) {
        m.col(i + 1) = (rhs.col(i) - upper[i] * m.col(i + 2)) / diag[i];
      }
    }

    a_.conservativeResize(dim, segs);
    b_.resize(dim, segs);
    c_.resize(dim, segs);
    d_.resize(dim, segs);
    for (Eigen::Index i = 0; i < segs; ++i) {
      b_.col(i) = (points.col(i + 1) - points.col(i)) / h[i] - h[i] * (2.0 * m.col(i) + m.col(i + 1)) / 6.0;
      c_.col(i) = m.col(i) / 2.0;
      d_.col(i) = (m.col(i + 1) - m.col(i)) / (6.0 * h[i]);
    }
    end_point_ = points.col(n - 1);
  }

  Eigen::Index dimension() const { return a_.rows(); }
  double s_begin() const { return knots_.front(); }
  double s_end() const { return knots_.back(); }
  const std::vector<double>& knots() const { return knots_; }

  VectorXd position(double s) const {
    if (s >= s_end()) return end_point_;
    const auto [i, t] = locate(s);
    return a_.col(i) + t * (b_.col(i) + t * (c_.col(i) + t * d_.col(i)));
  }
  VectorXd first_derivative(double s) const {
    const auto [i, t] = locate(s);
    return b_.col(i) + t * (2.0 * c_.col(i) + 3.0 * t * d_.col(i));
  }
  VectorXd second_derivative(double s) const {
    const auto [i, t] = locate(s);
    return 2.0 * c_.col(i) + 6.0 * t * d_.col(i);
  }

private:
  std::pair<Eigen::Index, double> locate(double s) const {
    s = std::clamp(s, s_begin(), s_end());
    auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
    auto i = static_cast<Eigen::Index>(std::distance(knots_.begin(), it)) - 1;
    i = std::clamp<Eigen::Index>(i, 0, static_cast<Eigen::Index>(knots_.size()) - 2);
    return {i, s - knots_[i]};
  }

  std::vector<double> knots_;
  Eigen::MatrixXd a_, b_, c_, d_;
  VectorXd end_point_;
};

/// Fits the twice-differentiable curve through a planned path. Consecutive
/// duplicates are merged and yaw is unwrapped so the curve never swings the
/// long way round.
inline GeometricPath fit_geometric_path(const Path& path) {
  if (path.empty()) throw Error("cannot fit an empty path");
  const Eigen::Index dim = path.front().dimension();
  std::vector<VectorXd> pts;
  for (const auto& p : path) {
    require_dimension(p.dimension(), dim, "path point");
    VectorXd c = p.coords();
    if (!pts.empty()) {
      c[3] = pts.back()[3] + wrap_angle(c[3] - pts.back()[3]);
      if ((c - pts.back()).norm() < 1e-12) continue;
    }
    pts.push_back(std::move(c));
  }
  if (pts.size() < 2) throw Error("path collapses to a single point");

  std::vector<double> knots{0.0};
  Eigen::MatrixXd m(dim, static_cast<Eigen::Index>(pts.size()));
  m.col(0) = pts[0];
  for (std::size_t i = 1; i < pts.size(); ++i) {
    knots.push_back(knots.back() + (pts[i] - pts[i - 1]).norm());
    m.col(static_cast<Eigen::Index>(i)) = pts[i];
  }
  return GeometricPath(std::move(knots), m);
}

}  // namespace amp
