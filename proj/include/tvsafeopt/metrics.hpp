#pragma once

#include <cstdint>
#include <vector>

#include "tvsafeopt/problems.hpp"
#include "tvsafeopt/safe_explore.hpp"

namespace tvsafeopt {

/// Per-step snapshot of the quantities tracked across a run. Undefined
/// rewards (halted step) are NaN; decisions are -1 when absent.
struct IterationRecord {
  int k = 0;
  int t = 0;
  std::int64_t safe_size = 0;
  std::int64_t unsafe_count = 0;
  double unsafe_ratio = 0.0;
  double coverage_ratio = 0.0;
  GridIndex x_k = -1;
  GridIndex x_hat = -1;
  double found_reward = 0.0;      // f(x_hat, t)
  double evaluated_reward = 0.0;  // f(x_k, t)
  double optimal_reward = 0.0;    // best ground-truth-feasible reward at t
  double instant_regret = 0.0;
  double cumulative_regret = 0.0;
  bool terminated = false;
};

/// Exhaustive ground-truth feasible region {x : c_i(x, t) >= 0 for all i}.
Mask ground_truth_safe_region(const ProblemInstance& problem, int t);

struct SafetyMetrics {
  std::int64_t unsafe_count = 0;
  double unsafe_ratio = 0.0;    // 0 when the safe set is empty
  double coverage_ratio = 0.0;  // 0 when the truth region is empty
};
SafetyMetrics safety_metrics(const Mask& safe, const Mask& truth);

/// Fills the reward and regret fields of `record` for best estimate
/// `x_hat` (-1 when the run has halted: regret stops accumulating).
/// Instant regret is clamped at zero so the cumulative series is
/// nondecreasing even when an unsafe estimate beats the feasible optimum.
void regret_update(IterationRecord& record, const ProblemInstance& problem, int t,
                   GridIndex x_hat, double previous_cumulative);
/// Overload reusing an already-computed ground-truth region.
void regret_update(IterationRecord& record, const ProblemInstance& problem, int t,
                   GridIndex x_hat, double previous_cumulative, const Mask& truth);

/// One-step reachability operator on frozen constraints: points whose
/// every constraint is certified by some member of S within margin `a`.
Mask reach_step(const ProblemInstance& problem, int t_frozen, const Mask& start, double a,
                double l_x);

/// Fixed point of reach_step (monotone, reached within |grid| rounds).
Mask reach_closure(const ProblemInstance& problem, int t_frozen, const Mask& start, double a,
                   double l_x);

}  // namespace tvsafeopt
