#pragma once

#include <algorithm>
#include <limits>

namespace tvsafeopt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed interval over the extended reals. Nonempty iff lo <= hi;
/// half-infinite and fully infinite endpoints are valid.
struct Interval {
  double lo = -kInf;
  double hi = kInf;

  static Interval all() { return {-kInf, kInf}; }
  static Interval at_least(double lo) { return {lo, kInf}; }
  static Interval of(double lo, double hi) { return {lo, hi}; }

  bool is_empty() const { return lo > hi; }
  bool contains(double v) const { return lo <= v && v <= hi; }

  /// u - l; +inf when either endpoint is infinite, 0 for degenerate [a, a].
  double width() const { return hi - lo; }

  bool operator==(const Interval&) const = default;
};

/// Minkowski sum with [-margin, margin]. Infinite endpoints stay infinite.
inline Interval inflate(Interval a, double margin) {
  return {a.lo - margin, a.hi + margin};
}

/// Intersection; may be empty (lo > hi).
inline Interval intersect(Interval a, Interval b) {
  return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

}  // namespace tvsafeopt
