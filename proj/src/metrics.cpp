#include "tvsafeopt/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "tvsafeopt/interval.hpp"

namespace tvsafeopt {

Mask ground_truth_safe_region(const ProblemInstance& problem, int t) {
  if (t < 0 || t > problem.horizon) {
    throw std::invalid_argument("ground_truth_safe_region: bad time");
  }
  Mask truth(problem.grid.size(), 0);
  for (GridIndex p = 0; p < problem.grid.size(); ++p) {
    const Eigen::VectorXd x = problem.grid.point(p);
    bool feasible = true;
    for (int i = 0; feasible && i < problem.n_constraints; ++i) {
      feasible = problem.constraint(x, t, i) >= 0.0;
    }
    truth[p] = feasible ? 1 : 0;
  }
  return truth;
}

SafetyMetrics safety_metrics(const Mask& safe, const Mask& truth) {
  if (safe.size() != truth.size()) {
    throw std::invalid_argument("safety_metrics: mask size mismatch");
  }
  SafetyMetrics metrics;
  std::int64_t safe_size = 0, covered = 0, truth_size = 0;
  for (std::size_t p = 0; p < safe.size(); ++p) {
    safe_size += safe[p] != 0;
    truth_size += truth[p] != 0;
    if (safe[p] && !truth[p]) ++metrics.unsafe_count;
    if (safe[p] && truth[p]) ++covered;
  }
  metrics.unsafe_ratio =
      safe_size > 0 ? static_cast<double>(metrics.unsafe_count) / safe_size : 0.0;
  metrics.coverage_ratio =
      truth_size > 0 ? static_cast<double>(covered) / truth_size : 0.0;
  return metrics;
}

namespace {

void regret_update_impl(IterationRecord& record, const ProblemInstance& problem, int t,
                        GridIndex x_hat, double previous_cumulative, const Mask& truth) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double optimal = -kInf;
  for (GridIndex p = 0; p < problem.grid.size(); ++p) {
    if (truth[p]) optimal = std::max(optimal, problem.reward(problem.grid.point(p), t));
  }
  const bool have_optimal = std::isfinite(optimal);
  record.optimal_reward = have_optimal ? optimal : nan;
  record.found_reward =
      x_hat >= 0 ? problem.reward(problem.grid.point(x_hat), t) : nan;
  if (x_hat >= 0 && have_optimal) {
    record.instant_regret = std::max(0.0, optimal - record.found_reward);
  } else {
    record.instant_regret = 0.0;
  }
  record.cumulative_regret = previous_cumulative + record.instant_regret;
}

}  // namespace

void regret_update(IterationRecord& record, const ProblemInstance& problem, int t,
                   GridIndex x_hat, double previous_cumulative) {
  regret_update_impl(record, problem, t, x_hat, previous_cumulative,
                     ground_truth_safe_region(problem, t));
}

void regret_update(IterationRecord& record, const ProblemInstance& problem, int t,
                   GridIndex x_hat, double previous_cumulative, const Mask& truth) {
  regret_update_impl(record, problem, t, x_hat, previous_cumulative, truth);
}

namespace {

/// Shared stamping core over precomputed frozen constraint values
/// (grid size x m).
Mask reach_step_values(const DecisionGrid& grid, const Eigen::MatrixXd& cvals,
                       const Mask& start, double a, double l_x) {
  const int m = static_cast<int>(cvals.cols());
  Mask result(grid.size(), 1);
  Mask certified(grid.size(), 0);
  for (int i = 0; i < m; ++i) {
    std::fill(certified.begin(), certified.end(), 0);
    bool whole_grid = false;
    for (GridIndex x = 0; x < grid.size() && !whole_grid; ++x) {
      if (!start[x]) continue;
      const double margin = cvals(x, i) - a;
      if (margin < 0.0) continue;
      if (l_x == 0.0) {
        whole_grid = true;
        break;
      }
      grid.for_each_in_ball(x, margin / l_x,
                            [&](GridIndex p, double) { certified[p] = 1; });
    }
    if (whole_grid) continue;
    for (GridIndex p = 0; p < grid.size(); ++p) result[p] &= certified[p];
  }
  for (GridIndex p = 0; p < grid.size(); ++p) result[p] |= start[p];
  return result;
}

Eigen::MatrixXd frozen_constraint_values(const ProblemInstance& problem, int t_frozen) {
  Eigen::MatrixXd cvals(problem.grid.size(), problem.n_constraints);
  for (GridIndex p = 0; p < problem.grid.size(); ++p) {
    const Eigen::VectorXd x = problem.grid.point(p);
    for (int i = 0; i < problem.n_constraints; ++i) {
      cvals(p, i) = problem.constraint(x, t_frozen, i);
    }
  }
  return cvals;
}

}  // namespace

Mask reach_step(const ProblemInstance& problem, int t_frozen, const Mask& start, double a,
                double l_x) {
  if (a < 0.0) throw std::invalid_argument("reach_step: margin must be >= 0");
  return reach_step_values(problem.grid, frozen_constraint_values(problem, t_frozen), start,
                           a, l_x);
}

Mask reach_closure(const ProblemInstance& problem, int t_frozen, const Mask& start, double a,
                   double l_x) {
  if (a < 0.0) throw std::invalid_argument("reach_closure: margin must be >= 0");
  const Eigen::MatrixXd cvals = frozen_constraint_values(problem, t_frozen);
  Mask current = start;
  while (true) {
    Mask next = reach_step_values(problem.grid, cvals, current, a, l_x);
    if (next == current) return current;
    current = std::move(next);
  }
}

}  // namespace tvsafeopt
