#include "tvsafeopt/safe_explore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tvsafeopt {

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::kTvSafeOpt: return "tvsafeopt";
    case Variant::kTvSafeOptLf: return "tvsafeopt-lf";
    case Variant::kSafeOptBaseline: return "safeopt";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  if (name == "tvsafeopt") return Variant::kTvSafeOpt;
  if (name == "tvsafeopt-lf") return Variant::kTvSafeOptLf;
  if (name == "safeopt") return Variant::kSafeOptBaseline;
  throw std::invalid_argument("unknown variant: " + name);
}

GridIndex mask_count(const Mask& mask) {
  GridIndex count = 0;
  for (std::uint8_t v : mask) count += v != 0;
  return count;
}

std::vector<GridIndex> mask_indices(const Mask& mask) {
  std::vector<GridIndex> indices;
  for (GridIndex p = 0; p < static_cast<GridIndex>(mask.size()); ++p) {
    if (mask[p]) indices.push_back(p);
  }
  return indices;
}

Mask update_safe_set(const DecisionGrid& grid, const Mask& prev_safe,
                     const ConfidenceTable& table, double l_x, double l_t) {
  if (static_cast<GridIndex>(prev_safe.size()) != grid.size()) {
    throw std::invalid_argument("update_safe_set: mask size mismatch");
  }
  const int n_outputs = static_cast<int>(table.lo.cols());
  Mask result(grid.size(), 1);
  Mask certified(grid.size(), 0);
  for (int i = 1; i < n_outputs; ++i) {
    std::fill(certified.begin(), certified.end(), 0);
    bool whole_grid = false;
    for (GridIndex x = 0; x < grid.size() && !whole_grid; ++x) {
      if (!prev_safe[x]) continue;
      const double margin = table.lo(x, i) - l_t;
      if (margin < 0.0) continue;
      if (l_x == 0.0) {
        whole_grid = true;
        break;
      }
      grid.for_each_in_ball(x, margin / l_x,
                            [&](GridIndex p, double) { certified[p] = 1; });
    }
    if (whole_grid) continue;  // this constraint excludes nothing
    for (GridIndex p = 0; p < grid.size(); ++p) result[p] &= certified[p];
  }
  return result;
}

Mask update_safe_set_lf(const ConfidenceTable& table) {
  const GridIndex n = table.lo.rows();
  const int n_outputs = static_cast<int>(table.lo.cols());
  Mask result(n, 1);
  for (GridIndex p = 0; p < n; ++p) {
    for (int i = 1; i < n_outputs; ++i) {
      if (!(table.lo(p, i) >= 0.0)) {
        result[p] = 0;
        break;
      }
    }
  }
  return result;
}

Mask maximizers(const Mask& safe, const ConfidenceTable& table) {
  const GridIndex n = table.lo.rows();
  double threshold = -kInf;
  for (GridIndex p = 0; p < n; ++p) {
    if (safe[p]) threshold = std::max(threshold, table.lo(p, 0));
  }
  Mask result(n, 0);
  for (GridIndex p = 0; p < n; ++p) {
    if (safe[p] && table.hi(p, 0) >= threshold) result[p] = 1;
  }
  return result;
}

namespace {

/// Largest certification radius from x under its constraint upper bounds;
/// negative when nothing is reachable, infinite when l_x = 0 still
/// certifies.
double expansion_radius(GridIndex x, const ConfidenceTable& table, double l_x, double l_t) {
  const int n_outputs = static_cast<int>(table.hi.cols());
  double best_u = -kInf;
  for (int i = 1; i < n_outputs; ++i) best_u = std::max(best_u, table.hi(x, i));
  const double margin = best_u - l_t;
  if (margin < 0.0) return -1.0;
  if (l_x == 0.0) return kInf;
  return margin / l_x;
}

}  // namespace

std::int64_t expander_count(GridIndex x, const DecisionGrid& grid, const Mask& safe,
                            const ConfidenceTable& table, double l_x, double l_t) {
  const double radius = expansion_radius(x, table, l_x, l_t);
  if (radius < 0.0) return 0;
  std::int64_t count = 0;
  grid.for_each_in_ball(x, radius, [&](GridIndex p, double) { count += safe[p] ? 0 : 1; });
  return count;
}

bool is_expander(GridIndex x, const DecisionGrid& grid, const Mask& safe,
                 const ConfidenceTable& table, double l_x, double l_t) {
  const double radius = expansion_radius(x, table, l_x, l_t);
  if (radius < 0.0) return false;
  bool found = false;
  grid.for_each_in_ball_until(x, radius, [&](GridIndex p, double) {
    found = !safe[p];
    return found;
  });
  return found;
}

Mask expanders(const DecisionGrid& grid, const Mask& safe, const ConfidenceTable& table,
               double l_x, double l_t) {
  Mask result(grid.size(), 0);
  for (GridIndex x = 0; x < grid.size(); ++x) {
    if (safe[x] && is_expander(x, grid, safe, table, l_x, l_t)) result[x] = 1;
  }
  return result;
}

namespace {

/// Scan of candidates outside the safe set for the Lipschitz-free
/// expander test at x. Exact rank-1 reconditioning per (candidate,
/// constraint); `stop_at_first` turns the count into a membership test.
std::int64_t lf_scan(GridIndex x, const DecisionGrid& grid, const Mask& safe,
                     const ConfidenceTable& table, const PosteriorModel& model,
                     double sqrt_beta, int t_next, bool stop_at_first) {
  const int n_outputs = static_cast<int>(table.hi.cols());
  const Eigen::VectorXd xh = grid.point(x);
  std::int64_t count = 0;
  for (GridIndex p = 0; p < grid.size(); ++p) {
    if (safe[p]) continue;
    const Eigen::VectorXd xq = grid.point(p);
    for (int i = 1; i < n_outputs; ++i) {
      const double hypothetical = table.hi(x, i);
      if (!std::isfinite(hypothetical)) continue;
      const auto [mean, std] =
          model.posterior_with_added(xh, t_next, hypothetical, xq, t_next, i);
      if (mean - sqrt_beta * std >= 0.0) {
        ++count;
        if (stop_at_first) return count;
        break;
      }
    }
  }
  return count;
}

}  // namespace

std::int64_t expander_count_lf(GridIndex x, const DecisionGrid& grid, const Mask& safe,
                               const ConfidenceTable& table, const PosteriorModel& model,
                               double sqrt_beta, int t_next) {
  return lf_scan(x, grid, safe, table, model, sqrt_beta, t_next, false);
}

bool is_expander_lf(GridIndex x, const DecisionGrid& grid, const Mask& safe,
                    const ConfidenceTable& table, const PosteriorModel& model,
                    double sqrt_beta, int t_next) {
  return lf_scan(x, grid, safe, table, model, sqrt_beta, t_next, true) > 0;
}

Mask expanders_lf(const DecisionGrid& grid, const Mask& safe, const ConfidenceTable& table,
                  const PosteriorModel& model, double sqrt_beta, int t_next) {
  Mask result(grid.size(), 0);
  for (GridIndex x = 0; x < grid.size(); ++x) {
    if (safe[x] && is_expander_lf(x, grid, safe, table, model, sqrt_beta, t_next)) {
      result[x] = 1;
    }
  }
  return result;
}

GridIndex select_decision(const Mask& candidates, const ConfidenceTable& table) {
  GridIndex best = -1;
  double best_width = -kInf;
  for (GridIndex p = 0; p < static_cast<GridIndex>(candidates.size()); ++p) {
    if (!candidates[p]) continue;
    const double width = table.max_width(p);
    if (width > best_width) {
      best_width = width;
      best = p;
    }
  }
  if (best < 0) throw std::invalid_argument("select_decision: no candidates");
  return best;
}

GridIndex best_estimate(const Mask& safe, const ConfidenceTable& table) {
  GridIndex best = -1;
  double best_lower = -kInf;
  for (GridIndex p = 0; p < static_cast<GridIndex>(safe.size()); ++p) {
    if (!safe[p]) continue;
    if (table.lo(p, 0) > best_lower) {
      best_lower = table.lo(p, 0);
      best = p;
    }
  }
  if (best < 0) throw std::invalid_argument("best_estimate: safe set empty");
  return best;
}

ExplorationState initialize_state(const ProblemInstance& problem, Variant variant,
                                  const LipschitzSchedule& lipschitz, RandomStream& noise) {
  lipschitz.validate();
  ExplorationState state;
  state.variant = variant;
  state.kernels = problem.recommended_kernels;
  state.lipschitz = lipschitz;
  if (variant == Variant::kSafeOptBaseline) {
    for (KernelSpec& spec : state.kernels) spec = KernelSpec::spatial(spec.spatial_lengthscale);
    state.lipschitz.l_t.assign(std::max<std::size_t>(1, lipschitz.l_t.size()), 0.0);
    state.lipschitz.l_bar = 0.0;
  }

  Mask seed(problem.grid.size(), 0);
  for (GridIndex p : problem.initial_safe_set) seed[p] = 1;
  state.safe = seed;
  state.maxims.assign(problem.grid.size(), 0);
  state.expans.assign(problem.grid.size(), 0);

  const double initial_lower =
      variant == Variant::kTvSafeOpt ? state.lipschitz.temporal(0) : 0.0;
  state.table =
      ConfidenceTable::initial(problem.grid.size(), problem.n_outputs(), seed, initial_lower);

  // First query: the lowest-index seed decision at t = 0.
  const GridIndex x0 =
      *std::min_element(problem.initial_safe_set.begin(), problem.initial_safe_set.end());
  state.observations = ObservationSet(problem.n_outputs(), problem.noise_std);
  const Eigen::VectorXd x = problem.grid.point(x0);
  const Eigen::VectorXd y = evaluate_noisy(problem, x, 0, noise);
  state.observations.add_joint(x, 0.0, y);
  state.model = PosteriorModel::condition(state.observations, state.kernels);
  state.x_k = x0;
  state.x_hat = x0;
  return state;
}

namespace {

template <typename ExpanderFn>
StepInfo step_body(ExplorationState& state, const ProblemInstance& problem, double sqrt_beta,
                   const Eigen::ArrayXXd& q_lo, const Eigen::ArrayXXd& q_hi,
                   InconsistencyPolicy policy, RandomStream& noise,
                   ExpanderFn&& compute_expanders) {
  (void)sqrt_beta;
  const int k = state.k + 1;
  const int t = k;  // one algorithm iteration per time step
  StepInfo info;
  info.k = k;
  info.t = t;

  if (state.variant == Variant::kTvSafeOptLf) {
    assign_table(state.table, q_lo, q_hi, k, t);
  } else {
    const double margin = state.lipschitz.temporal(t - 1);
    info.inconsistency_count =
        advance_table(state.table, q_lo, q_hi, margin, policy, k, t);
    state.inconsistency_total += info.inconsistency_count;
  }

  if (state.variant == Variant::kTvSafeOptLf) {
    state.safe = update_safe_set_lf(state.table);
  } else {
    state.safe = update_safe_set(problem.grid, state.safe, state.table, state.lipschitz.l_x,
                                 state.lipschitz.temporal(t));
  }
  state.k = k;
  state.t = t;
  info.safe_count = mask_count(state.safe);

  if (info.safe_count == 0) {
    state.terminated = true;
    std::fill(state.maxims.begin(), state.maxims.end(), 0);
    std::fill(state.expans.begin(), state.expans.end(), 0);
    state.x_k = -1;
    state.x_hat = -1;
    info.terminated = true;
    return info;
  }

  state.maxims = maximizers(state.safe, state.table);
  state.expans = compute_expanders(state);

  Mask candidates(state.safe.size(), 0);
  bool any_candidate = false;
  for (std::size_t p = 0; p < candidates.size(); ++p) {
    candidates[p] = state.maxims[p] | state.expans[p];
    any_candidate |= candidates[p] != 0;
  }
  // Total selection rule: fall back to the whole safe set when both
  // candidate sets are empty.
  state.x_k = select_decision(any_candidate ? candidates : state.safe, state.table);
  state.x_hat = best_estimate(state.safe, state.table);

  const Eigen::VectorXd x = problem.grid.point(state.x_k);
  const Eigen::VectorXd y = evaluate_noisy(problem, x, t, noise);
  state.observations.add_joint(x, t, y);
  state.model = state.model.extended(x, t, y);

  info.x_k = state.x_k;
  info.x_hat = state.x_hat;
  return info;
}

}  // namespace

StepInfo step(ExplorationState& state, const ProblemInstance& problem,
              const BetaSchedule& beta, InconsistencyPolicy policy, RandomStream& noise) {
  if (state.terminated) throw std::logic_error("step: state already terminated");
  const int k = state.k + 1;
  const int t = k;
  const double sqrt_beta = beta.sqrt_beta(k);

  const GridIndex n = problem.grid.size();
  Eigen::MatrixXd queries(n, problem.grid.dims());
  for (GridIndex p = 0; p < n; ++p) queries.row(p) = problem.grid.point(p);
  const Eigen::VectorXd times = Eigen::VectorXd::Constant(n, t);

  Eigen::ArrayXXd q_lo(n, problem.n_outputs());
  Eigen::ArrayXXd q_hi(n, problem.n_outputs());
  Eigen::VectorXd mean, stddev;
  for (int i = 0; i < problem.n_outputs(); ++i) {
    state.model.posterior_batch(queries, times, i, mean, stddev);
    q_lo.col(i) = mean.array() - sqrt_beta * stddev.array();
    q_hi.col(i) = mean.array() + sqrt_beta * stddev.array();
  }

  auto compute_expanders = [&](ExplorationState& s) {
    if (s.variant == Variant::kTvSafeOptLf) {
      return expanders_lf(problem.grid, s.safe, s.table, s.model, sqrt_beta, t + 1);
    }
    return expanders(problem.grid, s.safe, s.table, s.lipschitz.l_x,
                     s.lipschitz.temporal(t));
  };
  return step_body(state, problem, sqrt_beta, q_lo, q_hi, policy, noise, compute_expanders);
}

// ---------------------------------------------------------------------------
// GridPredictor
// ---------------------------------------------------------------------------

GridPredictor::GridPredictor(const DecisionGrid& grid) {
  grid_points_.resize(grid.size(), grid.dims());
  for (GridIndex p = 0; p < grid.size(); ++p) grid_points_.row(p) = grid.point(p);
}

const Eigen::MatrixXd& GridPredictor::spatial_columns(double sigma1,
                                                      const Eigen::MatrixXd& design_x) {
  Eigen::MatrixXd& cache = spatial_cache_[sigma1];
  const Eigen::Index n = design_x.rows();
  const Eigen::Index cached = cache.cols();
  bool prefix_ok = cached <= n;
  // Cached columns must match the design prefix (designs only grow during
  // a run); rebuild otherwise.
  if (prefix_ok && cached > 0) {
    const Eigen::Index probe = cached - 1;
    const double expected =
        std::exp(-(grid_points_.row(0).transpose() - design_x.row(probe).transpose())
                      .squaredNorm() /
                 (2.0 * sigma1 * sigma1));
    prefix_ok = std::abs(cache(0, probe) - expected) < 1e-12;
  }
  Eigen::Index start = prefix_ok ? cached : 0;
  if (!prefix_ok) cache.resize(grid_points_.rows(), 0);
  if (start < n) {
    cache.conservativeResize(grid_points_.rows(), n);
    const double denom = 2.0 * sigma1 * sigma1;
    for (Eigen::Index j = start; j < n; ++j) {
      cache.col(j) = (-(grid_points_.rowwise() - design_x.row(j)).rowwise().squaredNorm() /
                      denom)
                         .array()
                         .exp();
    }
  }
  return cache;
}

void GridPredictor::predict(const PosteriorModel& model, double t, Eigen::ArrayXXd& mean,
                            Eigen::ArrayXXd& stddev, bool retain) {
  const Eigen::Index q = grid_points_.rows();
  mean.resize(q, model.n_outputs());
  stddev.resize(q, model.n_outputs());
  mean.setZero();
  stddev.setOnes();
  whitened_.clear();

  for (int g = 0; g < model.n_groups(); ++g) {
    const KernelSpec& spec = model.group_kernel(g);
    const Eigen::MatrixXd& design_x = model.group_design_x(g);
    const Eigen::VectorXd& design_t = model.group_design_t(g);
    const Eigen::Index n = design_x.rows();

    const Eigen::MatrixXd& scols = spatial_columns(spec.spatial_lengthscale, design_x);
    Eigen::VectorXd temporal = Eigen::VectorXd::Ones(n);
    if (spec.mode == KernelMode::kSpatioTemporal) {
      const double denom = 2.0 * spec.temporal_lengthscale * spec.temporal_lengthscale;
      temporal = (-(design_t.array() - t).square() / denom).exp();
    }
    cross_buffer_ = scols.leftCols(n).array().rowwise() * temporal.transpose().array();

    Eigen::MatrixXd group_means;
    Eigen::VectorXd group_std;
    Eigen::MatrixXd whitened;
    model.predict_with_cross(g, cross_buffer_, group_means, group_std,
                             retain ? &whitened : nullptr);
    if (retain) whitened_[g] = std::move(whitened);

    const std::vector<int>& outputs = model.group_outputs(g);
    for (int c = 0; c < static_cast<int>(outputs.size()); ++c) {
      mean.col(outputs[c]) = group_means.col(c).array();
      stddev.col(outputs[c]) = group_std.array();
    }
  }
}

// ---------------------------------------------------------------------------
// SafeExploreRun
// ---------------------------------------------------------------------------

namespace {

/// Fast Lipschitz-free expanders: posterior moments and whitened crosses at
/// t_next come from one grid-wide prediction; candidates are screened with
/// the Cauchy-Schwarz bound on the posterior covariance before the exact
/// rank-1 update.
Mask expanders_lf_fast(const DecisionGrid& grid, const Mask& safe,
                       const ConfidenceTable& table, const PosteriorModel& model,
                       double sqrt_beta, const Eigen::ArrayXXd& mean_next,
                       const Eigen::ArrayXXd& std_next, const GridPredictor& predictor) {
  const int n_outputs = static_cast<int>(table.hi.cols());
  const double noise_var = model.noise_std() * model.noise_std();
  Mask result(grid.size(), 0);

  std::vector<GridIndex> outside;
  for (GridIndex p = 0; p < grid.size(); ++p) {
    if (!safe[p]) outside.push_back(p);
  }
  if (outside.empty()) return result;

  for (GridIndex x = 0; x < grid.size(); ++x) {
    if (!safe[x]) continue;
    bool found = false;
    for (int i = 1; i < n_outputs && !found; ++i) {
      const double hypothetical = table.hi(x, i);
      if (!std::isfinite(hypothetical)) continue;
      const int g = model.group_of(i);
      if (g < 0) continue;
      const Eigen::MatrixXd& whitened = predictor.whitened(g);
      const double mu_z = mean_next(x, i);
      const double sigma_z = std_next(x, i);
      const double gain = sigma_z * sigma_z + noise_var;
      const double delta = hypothetical - mu_z;
      const double sigma1 = model.group_kernel(g).spatial_lengthscale;
      const double denom = 2.0 * sigma1 * sigma1;
      // best-case bound factor over |rho| <= sigma_q * sigma_z
      const double screen =
          sigma_z * std::abs(delta) / gain -
          sqrt_beta * std::sqrt(std::max(0.0, 1.0 - sigma_z * sigma_z / gain));
      for (GridIndex p : outside) {
        const double mu_q = mean_next(p, i);
        const double sigma_q = std_next(p, i);
        if (mu_q + sigma_q * screen < 0.0) continue;  // cannot reach zero
        const double dist = grid.distance(p, x);
        const double prior = std::exp(-dist * dist / denom);
        const double rho = prior - whitened.col(p).dot(whitened.col(x));
        const double mean = mu_q + rho * delta / gain;
        const double var = std::max(0.0, sigma_q * sigma_q - rho * rho / gain);
        if (mean - sqrt_beta * std::sqrt(var) >= 0.0) {
          found = true;
          break;
        }
      }
    }
    result[x] = found ? 1 : 0;
  }
  return result;
}

}  // namespace

SafeExploreRun::SafeExploreRun(const ProblemInstance& problem, Variant variant,
                               BetaSchedule beta, LipschitzSchedule lipschitz,
                               InconsistencyPolicy policy, std::uint64_t seed)
    : problem_(problem),
      beta_(std::move(beta)),
      policy_(policy),
      noise_(seed, kNoiseStream),
      state_(initialize_state(problem, variant, lipschitz, noise_)),
      predictor_(problem.grid) {}

StepInfo SafeExploreRun::step() {
  if (done()) throw std::logic_error("SafeExploreRun::step: run already finished");
  const int k = state_.k + 1;
  const int t = k;
  const double sqrt_beta = beta_.sqrt_beta(k);

  predictor_.predict(state_.model, t, mean_, stddev_, false);
  Eigen::ArrayXXd q_lo = mean_ - sqrt_beta * stddev_;
  Eigen::ArrayXXd q_hi = mean_ + sqrt_beta * stddev_;

  Eigen::ArrayXXd mean_next, std_next;
  if (state_.variant == Variant::kTvSafeOptLf) {
    predictor_.predict(state_.model, t + 1, mean_next, std_next, true);
  }

  auto compute_expanders = [&](ExplorationState& s) {
    if (s.variant == Variant::kTvSafeOptLf) {
      return expanders_lf_fast(problem_.grid, s.safe, s.table, s.model, sqrt_beta, mean_next,
                               std_next, predictor_);
    }
    return expanders(problem_.grid, s.safe, s.table, s.lipschitz.l_x,
                     s.lipschitz.temporal(t));
  };
  return step_body(state_, problem_, sqrt_beta, q_lo, q_hi, policy_, noise_,
                   compute_expanders);
}

}  // namespace tvsafeopt
