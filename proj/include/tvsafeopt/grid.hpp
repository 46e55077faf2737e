#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace tvsafeopt {

using GridIndex = std::int64_t;

/// Finite quantized decision set: a row-major lattice with per-axis uniform
/// spacing, endpoints included. Coordinates are in the (scaled) decision
/// space; `scale` records the factor between scaled and physical units for
/// serialization (physical = scaled * scale).
class DecisionGrid {
 public:
  DecisionGrid() = default;  // empty placeholder; assign before use
  DecisionGrid(Eigen::VectorXd lower, Eigen::VectorXd upper, std::vector<int> counts,
               double scale = 1.0);

  int dims() const { return static_cast<int>(counts_.size()); }
  GridIndex size() const { return size_; }
  double scale() const { return scale_; }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  const std::vector<int>& counts() const { return counts_; }

  double axis_value(int dim, int i) const { return axes_[dim][i]; }
  double spacing(int dim) const { return spacing_[dim]; }

  Eigen::VectorXd point(GridIndex index) const;
  void multi_index(GridIndex index, int* out) const;
  GridIndex flat_index(const int* multi) const;

  /// Index of the lattice point closest to x (ties to the lower index).
  GridIndex nearest_index(const Eigen::VectorXd& x) const;

  /// Euclidean distance between two lattice points in scaled coordinates.
  double distance(GridIndex a, GridIndex b) const;

  /// Visits every lattice point within Euclidean `radius` of `center`
  /// (center included). `radius` may be infinite, which visits everything.
  template <typename Fn>
  void for_each_in_ball(GridIndex center, double radius, Fn&& fn) const;

  /// Early-exit variant: stops as soon as `fn` returns true.
  template <typename Fn>
  void for_each_in_ball_until(GridIndex center, double radius, Fn&& fn) const;

 private:
  Eigen::VectorXd lower_, upper_;
  std::vector<int> counts_;
  std::vector<std::vector<double>> axes_;
  std::vector<double> spacing_;
  std::vector<GridIndex> strides_;
  GridIndex size_ = 0;
  double scale_ = 1.0;
};

template <typename Fn>
void DecisionGrid::for_each_in_ball_until(GridIndex center, double radius, Fn&& fn) const {
  if (radius < 0.0) return;
  const int d = dims();
  int center_mi[8];
  multi_index(center, center_mi);

  // Per-axis index windows; infinite radius spans whole axes.
  int lo[8], hi[8], cur[8];
  for (int a = 0; a < d; ++a) {
    if (std::isinf(radius)) {
      lo[a] = 0;
      hi[a] = counts_[a] - 1;
    } else {
      const int reach = static_cast<int>(radius / spacing_[a]);
      lo[a] = std::max(0, center_mi[a] - reach);
      hi[a] = std::min(counts_[a] - 1, center_mi[a] + reach);
    }
    cur[a] = lo[a];
  }

  const double radius_sq = radius * radius;
  while (true) {
    double dist_sq = 0.0;
    for (int a = 0; a < d; ++a) {
      const double delta = (cur[a] - center_mi[a]) * spacing_[a];
      dist_sq += delta * delta;
    }
    if (dist_sq <= radius_sq || std::isinf(radius)) {
      if (fn(flat_index(cur), std::sqrt(dist_sq))) return;
    }
    int a = d - 1;
    while (a >= 0 && cur[a] == hi[a]) {
      cur[a] = lo[a];
      --a;
    }
    if (a < 0) break;
    ++cur[a];
  }
}

template <typename Fn>
void DecisionGrid::for_each_in_ball(GridIndex center, double radius, Fn&& fn) const {
  for_each_in_ball_until(center, radius, [&fn](GridIndex p, double dist) {
    fn(p, dist);
    return false;
  });
}

}  // namespace tvsafeopt
