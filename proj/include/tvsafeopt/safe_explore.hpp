#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tvsafeopt/confidence.hpp"
#include "tvsafeopt/gp.hpp"
#include "tvsafeopt/grid.hpp"
#include "tvsafeopt/lipschitz.hpp"
#include "tvsafeopt/problems.hpp"
#include "tvsafeopt/rng.hpp"

namespace tvsafeopt {

/// Exploration variants sharing one loop:
///   kTvSafeOpt      — Lipschitz-propagated intervals and safe sets over a
///                     spatio-temporal model
///   kTvSafeOptLf    — Lipschitz-free: plain confidence bounds define the
///                     safe set, expanders via hypothetical observations
///   kSafeOptBaseline — stationary treatment: spatial kernels, no temporal
///                     margins, intervals only ever tighten
enum class Variant { kTvSafeOpt, kTvSafeOptLf, kSafeOptBaseline };

std::string to_string(Variant variant);
Variant parse_variant(const std::string& name);

using Mask = std::vector<std::uint8_t>;

GridIndex mask_count(const Mask& mask);
std::vector<GridIndex> mask_indices(const Mask& mask);

// ---------------------------------------------------------------------------
// Set-valued operations. `table` columns: 0 = reward, 1..m = constraints.
// ---------------------------------------------------------------------------

/// Lipschitz-propagated safe set: x' survives iff for every constraint some
/// previously safe x certifies it, l(x,i) - l_x * d(x,x') - l_t >= 0.
/// May shrink and may come back empty.
Mask update_safe_set(const DecisionGrid& grid, const Mask& prev_safe,
                     const ConfidenceTable& table, double l_x, double l_t);

/// Lipschitz-free safe set: all decisions whose constraint lower bounds are
/// nonnegative at the current iteration.
Mask update_safe_set_lf(const ConfidenceTable& table);

/// Decisions whose reward upper bound reaches the best reward lower bound.
Mask maximizers(const Mask& safe, const ConfidenceTable& table);

/// Number of currently-unsafe decisions that evaluating x could certify
/// (constraint upper bounds propagated through the Lipschitz cone).
std::int64_t expander_count(GridIndex x, const DecisionGrid& grid, const Mask& safe,
                            const ConfidenceTable& table, double l_x, double l_t);
/// Membership-only variant: stops at the first witness.
bool is_expander(GridIndex x, const DecisionGrid& grid, const Mask& safe,
                 const ConfidenceTable& table, double l_x, double l_t);
Mask expanders(const DecisionGrid& grid, const Mask& safe, const ConfidenceTable& table,
               double l_x, double l_t);

/// Lipschitz-free expander count for x: decisions outside the safe set
/// whose lower bound turns nonnegative after hypothetically observing the
/// constraint upper bound u(x, i) at (x, t_next), for some constraint i.
/// Exact rank-1 reconditioning of the cached posterior.
std::int64_t expander_count_lf(GridIndex x, const DecisionGrid& grid, const Mask& safe,
                               const ConfidenceTable& table, const PosteriorModel& model,
                               double sqrt_beta, int t_next);
bool is_expander_lf(GridIndex x, const DecisionGrid& grid, const Mask& safe,
                    const ConfidenceTable& table, const PosteriorModel& model,
                    double sqrt_beta, int t_next);
Mask expanders_lf(const DecisionGrid& grid, const Mask& safe, const ConfidenceTable& table,
                  const PosteriorModel& model, double sqrt_beta, int t_next);

/// Most uncertain candidate: argmax over the candidate mask of
/// max_i w(x, i); ties resolve to the lowest grid index (then the lowest
/// output index inside max_width's column scan).
GridIndex select_decision(const Mask& candidates, const ConfidenceTable& table);

/// Maximizer of the reward lower bound within the safe set.
GridIndex best_estimate(const Mask& safe, const ConfidenceTable& table);

// ---------------------------------------------------------------------------
// Loop state and driver.
// ---------------------------------------------------------------------------

struct ExplorationState {
  Variant variant = Variant::kTvSafeOpt;
  std::vector<KernelSpec> kernels;  // effective per-output kernels
  LipschitzSchedule lipschitz;      // effective schedule (zeroed for the baseline)
  int k = 0;
  int t = 0;
  bool terminated = false;
  Mask safe, maxims, expans;
  ConfidenceTable table;
  ObservationSet observations{1, 1.0};
  PosteriorModel model;
  GridIndex x_k = -1;
  GridIndex x_hat = -1;
  std::int64_t inconsistency_total = 0;
};

struct StepInfo {
  int k = 0;
  int t = 0;
  bool terminated = false;
  GridIndex x_k = -1;
  GridIndex x_hat = -1;
  std::int64_t safe_count = 0;
  std::int64_t inconsistency_count = 0;
};

/// Bootstrap: interval initialization, deterministic first query of the
/// lowest-index seed decision at t = 0 (consumes one joint noise draw).
ExplorationState initialize_state(const ProblemInstance& problem, Variant variant,
                                  const LipschitzSchedule& lipschitz, RandomStream& noise);

/// One loop iteration on an explicit state (reference path; SafeExploreRun
/// is the cached fast path with the same semantics). Throws
/// ModelInconsistency under the strict policy; an empty safe set is not an
/// error and sets `terminated`.
StepInfo step(ExplorationState& state, const ProblemInstance& problem,
              const BetaSchedule& beta, InconsistencyPolicy policy, RandomStream& noise);

/// Grid-wide posterior evaluation with cached spatial kernel columns;
/// factorization solves are shared between outputs with a common kernel.
class GridPredictor {
 public:
  explicit GridPredictor(const DecisionGrid& grid);

  /// Fills mean/std (grid points x outputs) at query time t. When `retain`
  /// is true, keeps the whitened cross-covariance of each group for
  /// same-iteration covariance queries (see whitened()).
  void predict(const PosteriorModel& model, double t, Eigen::ArrayXXd& mean,
               Eigen::ArrayXXd& stddev, bool retain = false);

  /// L^{-1} K_*^T of `group` from the last retaining predict() call
  /// (design size x grid points).
  const Eigen::MatrixXd& whitened(int group) const { return whitened_.at(group); }

 private:
  const Eigen::MatrixXd& spatial_columns(double sigma1, const Eigen::MatrixXd& design_x);

  Eigen::MatrixXd grid_points_;  // grid size x dims
  std::map<double, Eigen::MatrixXd> spatial_cache_;  // sigma1 -> grid size x n
  std::map<int, Eigen::MatrixXd> whitened_;
  Eigen::MatrixXd cross_buffer_;
};

/// Owns one seeded run of a variant over a problem.
class SafeExploreRun {
 public:
  SafeExploreRun(const ProblemInstance& problem, Variant variant, BetaSchedule beta,
                 LipschitzSchedule lipschitz, InconsistencyPolicy policy,
                 std::uint64_t seed);

  const ExplorationState& state() const { return state_; }
  bool done() const { return state_.terminated || state_.k >= problem_.horizon; }
  StepInfo step();

 private:
  const ProblemInstance& problem_;
  BetaSchedule beta_;
  InconsistencyPolicy policy_;
  RandomStream noise_;
  ExplorationState state_;
  GridPredictor predictor_;
  Eigen::ArrayXXd mean_, stddev_;
};

}  // namespace tvsafeopt
