#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "tvsafeopt/grid.hpp"
#include "tvsafeopt/interval.hpp"

namespace tvsafeopt {

/// Confidence scaling sqrt(beta_k). Either a fixed value or the
/// theoretical schedule
///   sqrt(beta_k) = B + sigma * sqrt(2 * (capacity_k + 1 + ln(1/delta)))
/// where capacity_k is a user-supplied nondecreasing stand-in for the
/// information capacity of the joint model after k iterations (the last
/// entry extends beyond the supplied sequence).
class BetaSchedule {
 public:
  static BetaSchedule fixed(double sqrt_beta);
  static BetaSchedule theoretical(double rkhs_bound, double noise_level, double delta,
                                  std::vector<double> capacity);

  /// sqrt(beta_k) for iteration k >= 1. Nondecreasing in k in
  /// theoretical mode.
  double sqrt_beta(int k) const;

  bool is_fixed() const { return fixed_value_ > 0.0; }
  double fixed_value() const { return fixed_value_; }

 private:
  BetaSchedule() = default;
  double fixed_value_ = 0.0;
  double rkhs_bound_ = 0.0;
  double noise_level_ = 0.0;
  double delta_ = 0.0;
  std::vector<double> capacity_;
};

/// [mu - sqrt_beta * std, mu + sqrt_beta * std].
inline Interval q_interval(double mean, double stddev, double sqrt_beta) {
  return {mean - sqrt_beta * stddev, mean + sqrt_beta * stddev};
}

/// One step of the interval recursion: inflate the previous interval by the
/// temporal margin, then intersect with the fresh confidence interval.
/// Returns nullopt when the intersection is empty (model inconsistency);
/// the caller decides between falling back to `q` and aborting.
std::optional<Interval> c_update(Interval prev, double temporal_margin, Interval q);

enum class InconsistencyPolicy { kFallbackToQ, kStrict };

struct ModelInconsistency : std::runtime_error {
  GridIndex point;
  int output;
  int iteration;
  ModelInconsistency(GridIndex point, int output, int iteration);
};

/// Dense per-(decision, output) intervals for one iteration. Column 0 is
/// the reward, columns 1..m the constraints.
struct ConfidenceTable {
  int k = 0;
  int t = 0;
  Eigen::ArrayXXd lo;  // grid points x outputs
  Eigen::ArrayXXd hi;

  /// Initial table: constraint rows of the seed set start at
  /// [initial_lower, inf), everything else unbounded.
  static ConfidenceTable initial(GridIndex n_points, int n_outputs,
                                 const std::vector<std::uint8_t>& seed_mask,
                                 double initial_lower);

  Interval interval(GridIndex point, int output) const {
    return {lo(point, output), hi(point, output)};
  }
  /// u - l; +inf sentinel when either bound is infinite.
  double width(GridIndex point, int output) const {
    return hi(point, output) - lo(point, output);
  }
  /// max_i w(x, i).
  double max_width(GridIndex point) const;
};

/// Applies the recursion to every cell of `table` with fresh bounds
/// `q_lo`/`q_hi`, advancing (k, t). Returns the number of inconsistent
/// cells resolved by falling back to Q; throws ModelInconsistency for the
/// first offending cell under the strict policy.
std::int64_t advance_table(ConfidenceTable& table, const Eigen::ArrayXXd& q_lo,
                           const Eigen::ArrayXXd& q_hi, double temporal_margin,
                           InconsistencyPolicy policy, int k, int t);

/// Replaces the table contents with the fresh bounds (no memory across
/// iterations); used by the Lipschitz-free variant.
void assign_table(ConfidenceTable& table, const Eigen::ArrayXXd& q_lo,
                  const Eigen::ArrayXXd& q_hi, int k, int t);

}  // namespace tvsafeopt
