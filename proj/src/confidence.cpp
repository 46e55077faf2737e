#include "tvsafeopt/confidence.hpp"

#include <cmath>
#include <string>

namespace tvsafeopt {

BetaSchedule BetaSchedule::fixed(double sqrt_beta) {
  if (!(sqrt_beta > 0.0)) throw std::invalid_argument("BetaSchedule: sqrt_beta must be > 0");
  BetaSchedule schedule;
  schedule.fixed_value_ = sqrt_beta;
  return schedule;
}

BetaSchedule BetaSchedule::theoretical(double rkhs_bound, double noise_level, double delta,
                                       std::vector<double> capacity) {
  if (!(rkhs_bound > 0.0)) throw std::invalid_argument("BetaSchedule: B must be > 0");
  if (!(noise_level > 0.0)) throw std::invalid_argument("BetaSchedule: sigma must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("BetaSchedule: delta must lie in (0, 1)");
  }
  if (capacity.empty()) throw std::invalid_argument("BetaSchedule: capacity sequence empty");
  for (std::size_t i = 0; i < capacity.size(); ++i) {
    if (capacity[i] < 0.0 || (i > 0 && capacity[i] < capacity[i - 1])) {
      throw std::invalid_argument(
          "BetaSchedule: capacity sequence must be nonnegative and nondecreasing");
    }
  }
  BetaSchedule schedule;
  schedule.rkhs_bound_ = rkhs_bound;
  schedule.noise_level_ = noise_level;
  schedule.delta_ = delta;
  schedule.capacity_ = std::move(capacity);
  return schedule;
}

double BetaSchedule::sqrt_beta(int k) const {
  if (k < 1) throw std::invalid_argument("BetaSchedule: iteration must be >= 1");
  if (is_fixed()) return fixed_value_;
  const std::size_t idx = std::min<std::size_t>(k - 1, capacity_.size() - 1);
  const double capacity = capacity_[idx];
  return rkhs_bound_ +
         noise_level_ * std::sqrt(2.0 * (capacity + 1.0 + std::log(1.0 / delta_)));
}

std::optional<Interval> c_update(Interval prev, double temporal_margin, Interval q) {
  if (prev.is_empty()) throw std::invalid_argument("c_update: previous interval empty");
  if (temporal_margin < 0.0) throw std::invalid_argument("c_update: margin must be >= 0");
  const Interval result = intersect(inflate(prev, temporal_margin), q);
  if (result.is_empty()) return std::nullopt;
  return result;
}

ModelInconsistency::ModelInconsistency(GridIndex point, int output, int iteration)
    : std::runtime_error("empty confidence intersection at point " + std::to_string(point) +
                         ", output " + std::to_string(output) + ", iteration " +
                         std::to_string(iteration)),
      point(point),
      output(output),
      iteration(iteration) {}

ConfidenceTable ConfidenceTable::initial(GridIndex n_points, int n_outputs,
                                         const std::vector<std::uint8_t>& seed_mask,
                                         double initial_lower) {
  if (static_cast<GridIndex>(seed_mask.size()) != n_points) {
    throw std::invalid_argument("ConfidenceTable: seed mask size mismatch");
  }
  ConfidenceTable table;
  table.k = 0;
  table.t = 0;
  table.lo = Eigen::ArrayXXd::Constant(n_points, n_outputs, -kInf);
  table.hi = Eigen::ArrayXXd::Constant(n_points, n_outputs, kInf);
  for (GridIndex p = 0; p < n_points; ++p) {
    if (!seed_mask[p]) continue;
    for (int i = 1; i < n_outputs; ++i) table.lo(p, i) = initial_lower;
  }
  return table;
}

double ConfidenceTable::max_width(GridIndex point) const {
  return (hi.row(point) - lo.row(point)).maxCoeff();
}

std::int64_t advance_table(ConfidenceTable& table, const Eigen::ArrayXXd& q_lo,
                           const Eigen::ArrayXXd& q_hi, double temporal_margin,
                           InconsistencyPolicy policy, int k, int t) {
  if (q_lo.rows() != table.lo.rows() || q_lo.cols() != table.lo.cols() ||
      q_hi.rows() != table.hi.rows() || q_hi.cols() != table.hi.cols()) {
    throw std::invalid_argument("advance_table: shape mismatch");
  }
  // [lo - m, hi + m] ∩ [q_lo, q_hi]; extended-real arithmetic is safe since
  // the margin is finite.
  Eigen::ArrayXXd new_lo = (table.lo - temporal_margin).max(q_lo);
  Eigen::ArrayXXd new_hi = (table.hi + temporal_margin).min(q_hi);

  std::int64_t inconsistencies = 0;
  for (Eigen::Index p = 0; p < new_lo.rows(); ++p) {
    for (Eigen::Index i = 0; i < new_lo.cols(); ++i) {
      if (new_lo(p, i) > new_hi(p, i)) {
        if (policy == InconsistencyPolicy::kStrict) {
          throw ModelInconsistency(p, static_cast<int>(i), k);
        }
        new_lo(p, i) = q_lo(p, i);
        new_hi(p, i) = q_hi(p, i);
        ++inconsistencies;
      }
    }
  }
  table.lo = std::move(new_lo);
  table.hi = std::move(new_hi);
  table.k = k;
  table.t = t;
  return inconsistencies;
}

void assign_table(ConfidenceTable& table, const Eigen::ArrayXXd& q_lo,
                  const Eigen::ArrayXXd& q_hi, int k, int t) {
  table.lo = q_lo;
  table.hi = q_hi;
  table.k = k;
  table.t = t;
}

}  // namespace tvsafeopt
