#include "tvsafeopt/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tvsafeopt {

DecisionGrid::DecisionGrid(Eigen::VectorXd lower, Eigen::VectorXd upper,
                           std::vector<int> counts, double scale)
    : lower_(std::move(lower)),
      upper_(std::move(upper)),
      counts_(std::move(counts)),
      scale_(scale) {
  const int d = static_cast<int>(counts_.size());
  if (d == 0 || d > 8) {
    throw std::invalid_argument("DecisionGrid: dimension must be in [1, 8]");
  }
  if (lower_.size() != d || upper_.size() != d) {
    throw std::invalid_argument("DecisionGrid: bounds/counts dimension mismatch");
  }
  axes_.resize(d);
  spacing_.resize(d);
  strides_.resize(d);
  size_ = 1;
  for (int a = 0; a < d; ++a) {
    const int n = counts_[a];
    if (n < 1) throw std::invalid_argument("DecisionGrid: axis count must be >= 1");
    if (!(upper_(a) > lower_(a))) {
      throw std::invalid_argument("DecisionGrid: upper bound must exceed lower bound");
    }
    axes_[a].resize(n);
    spacing_[a] = n > 1 ? (upper_(a) - lower_(a)) / (n - 1) : 0.0;
    for (int i = 0; i < n; ++i) {
      axes_[a][i] = n > 1 ? lower_(a) + spacing_[a] * i : lower_(a);
    }
    axes_[a][n - 1] = upper_(a);  // exact endpoint
    size_ *= n;
  }
  for (int a = d - 1; a >= 0; --a) {
    strides_[a] = (a == d - 1) ? 1 : strides_[a + 1] * counts_[a + 1];
  }
}

Eigen::VectorXd DecisionGrid::point(GridIndex index) const {
  const int d = dims();
  int mi[8];
  multi_index(index, mi);
  Eigen::VectorXd x(d);
  for (int a = 0; a < d; ++a) x(a) = axes_[a][mi[a]];
  return x;
}

void DecisionGrid::multi_index(GridIndex index, int* out) const {
  const int d = dims();
  for (int a = 0; a < d; ++a) {
    out[a] = static_cast<int>(index / strides_[a]);
    index %= strides_[a];
  }
}

GridIndex DecisionGrid::flat_index(const int* multi) const {
  GridIndex index = 0;
  for (int a = 0; a < dims(); ++a) index += strides_[a] * multi[a];
  return index;
}

GridIndex DecisionGrid::nearest_index(const Eigen::VectorXd& x) const {
  if (x.size() != dims()) {
    throw std::invalid_argument("DecisionGrid::nearest_index: dimension mismatch");
  }
  int mi[8];
  for (int a = 0; a < dims(); ++a) {
    const int n = counts_[a];
    int best = 0;
    if (n > 1) {
      const int guess = std::clamp(
          static_cast<int>(std::lround((x(a) - lower_(a)) / spacing_[a])), 0, n - 1);
      best = guess;
      // ties resolve to the lower index
      for (int i = std::max(0, guess - 1); i <= std::min(n - 1, guess + 1); ++i) {
        if (std::abs(x(a) - axes_[a][i]) < std::abs(x(a) - axes_[a][best])) best = i;
        if (std::abs(x(a) - axes_[a][i]) == std::abs(x(a) - axes_[a][best]) && i < best) best = i;
      }
    }
    mi[a] = best;
  }
  return flat_index(mi);
}

double DecisionGrid::distance(GridIndex a, GridIndex b) const {
  int ma[8], mb[8];
  multi_index(a, ma);
  multi_index(b, mb);
  double sum = 0.0;
  for (int i = 0; i < dims(); ++i) {
    const double delta = (ma[i] - mb[i]) * spacing_[i];
    sum += delta * delta;
  }
  return std::sqrt(sum);
}

}  // namespace tvsafeopt
