#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tvsafeopt/grid.hpp"
#include "tvsafeopt/gp.hpp"
#include "tvsafeopt/kernel.hpp"
#include "tvsafeopt/lipschitz.hpp"
#include "tvsafeopt/rng.hpp"

namespace tvsafeopt {

/// A benchmark problem: ground-truth reward/constraint oracles over a
/// quantized decision set, the observation noise level, an initial safe
/// set, reference Lipschitz bounds, and recommended kernels per output
/// (output 0 is the reward, 1..m the constraints).
struct ProblemInstance {
  std::string name;
  DecisionGrid grid;
  int horizon = 0;
  int n_constraints = 0;
  std::function<double(const Eigen::VectorXd&, int)> reward;           // f(x, t)
  std::function<double(const Eigen::VectorXd&, int, int)> constraint;  // c_i(x, t), i in [0, m)
  double noise_std = 0.01;
  std::vector<GridIndex> initial_safe_set;
  LipschitzSchedule reference_lipschitz;
  std::vector<KernelSpec> recommended_kernels;  // m + 1 entries

  int n_outputs() const { return n_constraints + 1; }

  /// h(x, t, i): the reward for i = 0, constraint i for i >= 1.
  double output(const Eigen::VectorXd& x, int t, int i) const {
    return i == 0 ? reward(x, t) : constraint(x, t, i - 1);
  }

  /// Checks Assumption-style invariants (seed strictly feasible at t = 0,
  /// seed on the grid, positive noise). Throws std::invalid_argument.
  void validate() const;
};

/// Two-dimensional moving-disk benchmark on [-2, 2]^2. The seed decision
/// is snapped to the nearest lattice point.
ProblemInstance synthetic_problem(int horizon = 200, int grid_n = 100);

/// Per-step exogenous inputs for the compressor-station benchmark.
struct CompressorTimeSeries {
  std::vector<double> demand;       // M_t, mass flow
  std::vector<double> head;         // H_t, J / kg
  Eigen::MatrixX3d degradation;     // d_it per compressor, in [0, 1)

  std::size_t length() const { return demand.size(); }
  void validate() const;
};

/// Parametric stand-in for measured station data: sinusoid plus trend for
/// demand and head, monotone degradation ramps per compressor, optional
/// seeded jitter.
struct TimeSeriesParams {
  double demand_base = 430.0;
  double demand_amplitude = 25.0;
  double demand_period = 75.0;
  double demand_trend = 0.05;
  double head_base = 120000.0;
  double head_amplitude = 4000.0;
  double head_period = 90.0;
  double head_trend = -8.0;
  double degradation_slope[3] = {0.0006, 0.0004, 0.00075};
  double jitter_std = 0.0;  // relative, applied to demand and head

  bool operator==(const TimeSeriesParams&) const = default;
};

CompressorTimeSeries generate_timeseries(const TimeSeriesParams& params, int horizon,
                                         std::uint64_t seed);

/// CSV with header `t,M,H,d1,d2,d3`, one row per time step.
CompressorTimeSeries load_timeseries(const std::string& path);
void save_timeseries(const CompressorTimeSeries& series, const std::string& path);

/// Compressor-map boundaries in physical mass-flow units as functions of
/// head. Feasible flow lies in [max(surge, min_speed), min(choke, max_speed)].
double compressor_surge(double head);
double compressor_min_speed(double head);
double compressor_choke(double head);
double compressor_max_speed(double head);
/// (lower, upper) physical flow bounds at the given head.
std::pair<double, double> compressor_flow_bounds(double head);
/// Linear-in-head approximations of the same boundaries.
std::pair<double, double> compressor_flow_bounds_linearized(double head);

inline constexpr double kCompressorScale = 200.0;  // K

/// Three parallel compressors: reward is negated degraded power, seven
/// constraints (per-machine flow box plus the demand halfspace), decisions
/// scaled by kCompressorScale.
ProblemInstance compressor_problem(const CompressorTimeSeries& series, int horizon = 200,
                                   int grid_n = 60);

/// All m+1 outputs at (x, t) perturbed by i.i.d. Normal(0, noise_std^2)
/// draws from `noise`.
Eigen::VectorXd evaluate_noisy(const ProblemInstance& problem, const Eigen::VectorXd& x,
                               int t, RandomStream& noise);

/// Decision of the linearized-constraint baseline at time t, or
/// feasible = false when no lattice point satisfies the linearized set.
struct ApproxDecision {
  bool feasible = false;
  GridIndex index = -1;
};
ApproxDecision approx_optimization_baseline(const ProblemInstance& problem,
                                            const CompressorTimeSeries& series, int t);
/// Lattice points satisfying the linearized constraint set at time t
/// (the baseline's notion of a safe set).
std::vector<std::uint8_t> approx_feasible_mask(const ProblemInstance& problem,
                                               const CompressorTimeSeries& series, int t);

/// Stationary copy: oracles pinned at t0, zero temporal Lipschitz bounds.
ProblemInstance freeze_problem(const ProblemInstance& problem, int t0);

}  // namespace tvsafeopt
