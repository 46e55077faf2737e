#pragma once

#include <numeric>
#include <stdexcept>
#include <vector>

namespace tvsafeopt {

/// Spatial Lipschitz constant, per-step temporal bounds, and a bound on
/// their sum. temporal(t) extends the last entry beyond the stored
/// sequence; an empty sequence means no temporal change (all zeros).
struct LipschitzSchedule {
  double l_x = 0.0;
  std::vector<double> l_t;
  double l_bar = 0.0;

  double temporal(int t) const {
    if (l_t.empty()) return 0.0;
    if (t < 0) throw std::invalid_argument("LipschitzSchedule: negative time");
    const std::size_t idx = std::min<std::size_t>(t, l_t.size() - 1);
    return l_t[idx];
  }

  double sum_temporal() const { return std::accumulate(l_t.begin(), l_t.end(), 0.0); }

  void validate() const {
    if (l_x < 0.0) throw std::invalid_argument("LipschitzSchedule: l_x must be >= 0");
    for (double v : l_t) {
      if (v < 0.0) throw std::invalid_argument("LipschitzSchedule: temporal bound < 0");
    }
    if (l_bar < sum_temporal() - 1e-9) {
      throw std::invalid_argument("LipschitzSchedule: l_bar below the temporal sum");
    }
  }

  static LipschitzSchedule zero() { return {0.0, {}, 0.0}; }

  static LipschitzSchedule constant(double l_x, double l_t_value, int horizon) {
    LipschitzSchedule schedule;
    schedule.l_x = l_x;
    schedule.l_t.assign(std::max(1, horizon), l_t_value);
    schedule.l_bar = l_t_value * std::max(1, horizon);
    return schedule;
  }
};

}  // namespace tvsafeopt
