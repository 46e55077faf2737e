#include "tvsafeopt/problems.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "tvsafeopt/interval.hpp"

namespace tvsafeopt {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Safety margin applied to finite-difference Lipschitz estimates.
constexpr double kLipschitzInflation = 1.1;

/// Exhaustive per-step temporal bounds: max_{x, i} |h(x, t+1, i) - h(x, t, i)|
/// over the whole lattice, inflated.
std::vector<double> temporal_bounds_exhaustive(const ProblemInstance& problem) {
  std::vector<double> bounds(problem.horizon, 0.0);
  const GridIndex n = problem.grid.size();
  for (int t = 0; t + 1 <= problem.horizon; ++t) {
    double worst = 0.0;
    for (GridIndex p = 0; p < n; ++p) {
      const Eigen::VectorXd x = problem.grid.point(p);
      for (int i = 0; i < problem.n_outputs(); ++i) {
        worst = std::max(worst, std::abs(problem.output(x, t + 1, i) - problem.output(x, t, i)));
      }
    }
    bounds[t] = kLipschitzInflation * worst;
  }
  return bounds;
}

/// Finite-difference spatial constant over the constraint outputs:
/// per-axis max slopes combined as sqrt(sum of squares), inflated. Only
/// the constraints enter, since the safe-set and expander rules never
/// multiply the spatial constant against reward bounds.
double spatial_constant_fd(const ProblemInstance& problem) {
  const int d = problem.grid.dims();
  const int t_stride = std::max(1, problem.horizon / 16);
  double worst = 0.0;
  for (int i = 0; i < problem.n_constraints; ++i) {
    std::vector<double> axis_slope(d, 0.0);
    for (int t = 0; t <= problem.horizon; t += t_stride) {
      for (GridIndex p = 0; p < problem.grid.size(); ++p) {
        int mi[8];
        problem.grid.multi_index(p, mi);
        const Eigen::VectorXd x = problem.grid.point(p);
        const double here = problem.constraint(x, t, i);
        for (int a = 0; a < d; ++a) {
          if (mi[a] + 1 >= problem.grid.counts()[a]) continue;
          Eigen::VectorXd xn = x;
          xn(a) = problem.grid.axis_value(a, mi[a] + 1);
          const double slope =
              std::abs(problem.constraint(xn, t, i) - here) / problem.grid.spacing(a);
          axis_slope[a] = std::max(axis_slope[a], slope);
        }
      }
    }
    double norm_sq = 0.0;
    for (double g : axis_slope) norm_sq += g * g;
    worst = std::max(worst, std::sqrt(norm_sq));
  }
  return kLipschitzInflation * worst;
}

LipschitzSchedule finalize_schedule(double l_x, std::vector<double> l_t) {
  LipschitzSchedule schedule;
  schedule.l_x = l_x;
  schedule.l_t = std::move(l_t);
  schedule.l_bar = schedule.sum_temporal();
  schedule.validate();
  return schedule;
}

}  // namespace

void ProblemInstance::validate() const {
  if (horizon < 1) throw std::invalid_argument("ProblemInstance: horizon must be >= 1");
  if (n_constraints < 1) throw std::invalid_argument("ProblemInstance: need >= 1 constraint");
  if (initial_safe_set.empty()) {
    throw std::invalid_argument("ProblemInstance: initial safe set empty");
  }
  if (static_cast<int>(recommended_kernels.size()) != n_outputs()) {
    throw std::invalid_argument("ProblemInstance: one kernel per output required");
  }
  if (noise_std < 0.0) throw std::invalid_argument("ProblemInstance: negative noise");
  for (GridIndex p : initial_safe_set) {
    if (p < 0 || p >= grid.size()) {
      throw std::invalid_argument("ProblemInstance: seed index out of range");
    }
    const Eigen::VectorXd x = grid.point(p);
    for (int i = 0; i < n_constraints; ++i) {
      if (!(constraint(x, 0, i) > 0.0)) {
        throw std::invalid_argument("ProblemInstance: seed decision not strictly safe at t=0");
      }
    }
  }
  reference_lipschitz.validate();
}

ProblemInstance synthetic_problem(int horizon, int grid_n) {
  ProblemInstance problem;
  problem.name = "synthetic";
  problem.grid = DecisionGrid(Eigen::Vector2d(-2.0, -2.0), Eigen::Vector2d(2.0, 2.0),
                              {grid_n, grid_n});
  problem.horizon = horizon;
  problem.n_constraints = 1;
  problem.noise_std = 0.01;

  problem.reward = [](const Eigen::VectorXd& x, int t) {
    return -std::exp(x(0) * x(0)) - std::log(1.0 + x(1) * x(1)) + 0.01 * t;
  };
  problem.constraint = [](const Eigen::VectorXd& x, int t, int /*i*/) {
    const double shift = 0.5 * (1.0 - std::cos(2.0 * kPi * t / 50.0));
    const double dx = x(0) + 0.5 - shift * std::cos(kPi / 6.0);
    const double dy = x(1) - 0.3 - shift * std::sin(kPi / 6.0);
    return 1.0 - dx * dx - dy * dy;
  };

  problem.initial_safe_set = {problem.grid.nearest_index(Eigen::Vector2d(-0.5, 0.0))};
  problem.recommended_kernels = {KernelSpec::spatio_temporal(1.0, 25.0),
                                 KernelSpec::spatio_temporal(1.0, 15.0)};
  problem.reference_lipschitz =
      finalize_schedule(spatial_constant_fd(problem), temporal_bounds_exhaustive(problem));
  problem.validate();
  return problem;
}

void CompressorTimeSeries::validate() const {
  if (demand.size() != head.size() ||
      static_cast<Eigen::Index>(demand.size()) != degradation.rows()) {
    throw std::invalid_argument("CompressorTimeSeries: column lengths differ");
  }
  for (std::size_t t = 0; t < demand.size(); ++t) {
    if (!(demand[t] > 0.0)) throw std::invalid_argument("CompressorTimeSeries: demand <= 0");
    if (!(head[t] > 0.0)) throw std::invalid_argument("CompressorTimeSeries: head <= 0");
    for (int j = 0; j < 3; ++j) {
      const double d = degradation(t, j);
      if (!(d >= 0.0 && d < 1.0)) {
        throw std::invalid_argument("CompressorTimeSeries: degradation outside [0, 1)");
      }
    }
  }
}

CompressorTimeSeries generate_timeseries(const TimeSeriesParams& params, int horizon,
                                         std::uint64_t seed) {
  if (horizon < 0) throw std::invalid_argument("generate_timeseries: negative horizon");
  CompressorTimeSeries series;
  const int n = horizon + 1;
  series.demand.resize(n);
  series.head.resize(n);
  series.degradation.resize(n, 3);
  RandomStream rng(seed, kSeriesStream);
  for (int t = 0; t < n; ++t) {
    double demand = params.demand_base + params.demand_trend * t +
                    params.demand_amplitude * std::sin(2.0 * kPi * t / params.demand_period);
    double head = params.head_base + params.head_trend * t +
                  params.head_amplitude * std::sin(2.0 * kPi * t / params.head_period);
    if (params.jitter_std > 0.0) {
      demand *= 1.0 + params.jitter_std * rng.normal();
      head *= 1.0 + params.jitter_std * rng.normal();
    }
    series.demand[t] = demand;
    series.head[t] = head;
    for (int j = 0; j < 3; ++j) {
      series.degradation(t, j) = std::min(0.95, params.degradation_slope[j] * t);
    }
  }
  series.validate();
  return series;
}

CompressorTimeSeries load_timeseries(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_timeseries: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_timeseries: empty file");
  if (line.back() == '\r') line.pop_back();
  if (line != "t,M,H,d1,d2,d3") {
    throw std::runtime_error("load_timeseries: expected header t,M,H,d1,d2,d3");
  }
  std::vector<std::array<double, 6>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<double, 6> row{};
    std::stringstream ss(line);
    std::string field;
    for (int c = 0; c < 6; ++c) {
      if (!std::getline(ss, field, ',')) {
        throw std::runtime_error("load_timeseries: line " + std::to_string(line_no) +
                                 ": expected 6 fields");
      }
      try {
        std::size_t used = 0;
        row[c] = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw std::runtime_error("load_timeseries: line " + std::to_string(line_no) +
                                 ": bad number '" + field + "'");
      }
    }
    if (std::getline(ss, field, ',')) {
      throw std::runtime_error("load_timeseries: line " + std::to_string(line_no) +
                               ": too many fields");
    }
    if (static_cast<std::size_t>(row[0]) != rows.size()) {
      throw std::runtime_error("load_timeseries: line " + std::to_string(line_no) +
                               ": time steps must be consecutive from 0");
    }
    rows.push_back(row);
  }
  CompressorTimeSeries series;
  series.demand.resize(rows.size());
  series.head.resize(rows.size());
  series.degradation.resize(rows.size(), 3);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    series.demand[t] = rows[t][1];
    series.head[t] = rows[t][2];
    for (int j = 0; j < 3; ++j) series.degradation(t, j) = rows[t][3 + j];
  }
  series.validate();
  return series;
}

void save_timeseries(const CompressorTimeSeries& series, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_timeseries: cannot open " + path);
  out << "t,M,H,d1,d2,d3\n";
  char buf[512];
  for (std::size_t t = 0; t < series.length(); ++t) {
    std::snprintf(buf, sizeof(buf), "%zu,%.15g,%.15g,%.15g,%.15g,%.15g\n", t, series.demand[t],
                  series.head[t], series.degradation(t, 0), series.degradation(t, 1),
                  series.degradation(t, 2));
    out << buf;
  }
}

// Compressor-map boundary curves (physical mass-flow units).
double compressor_surge(double head) {
  const double h = (head - 1.235e5) / 3.764e4;
  return -1.953 * h * h + 16.86 * h + 118.1;
}

double compressor_min_speed(double head) {
  const double h = (head - 6.152e4) / 7002.0;
  return -1.516 * h * h - 11.12 * h + 116.9;
}

double compressor_choke(double head) {
  const double h = (head - 8.706e4) / 5.289e4;
  return 73.21 * h + 183.7;
}

double compressor_max_speed(double head) {
  const double h = (head - 1.572e5) / 2.044e4;
  return -7.260 * h * h - 29.65 * h + 204.4;
}

std::pair<double, double> compressor_flow_bounds(double head) {
  return {std::max(compressor_surge(head), compressor_min_speed(head)),
          std::min(compressor_choke(head), compressor_max_speed(head))};
}

std::pair<double, double> compressor_flow_bounds_linearized(double head) {
  const double surge = 4.481e-4 * head + 59.76;
  const double min_speed = -1.333e-3 * head + 193.3;
  const double choke = 1.611e-3 * head + 46.77;
  const double max_speed = -1.667e-3 * head + 461.7;
  return {std::max(surge, min_speed), std::min(choke, max_speed)};
}

namespace {

struct CompressorData {
  std::vector<double> flow_lo;     // L_t, scaled
  std::vector<double> flow_hi;     // U_t, scaled
  std::vector<double> demand_rhs;  // 0.67 * M_t / K
  std::vector<double> head_norm;   // (H_t - 1.016e5) / 3.210e4
  Eigen::MatrixX3d degradation;
};

// Power-polynomial coefficients.
constexpr double kA1 = 1.979e7, kA2 = 5.274e6, kA3 = 5.375e6;
constexpr double kA4 = 6.055e5, kA5 = 5.718e5, kA6 = 3.319e5;

double machine_power(double flow_norm, double head_norm) {
  return kA1 + kA2 * flow_norm + kA3 * head_norm + kA4 * flow_norm * flow_norm +
         kA5 * flow_norm * head_norm + kA6 * head_norm * head_norm;
}

/// Per-step temporal bounds from the precomputed envelope arrays; the
/// reward part bounds |delta f| by the sum of per-machine axis maxima.
std::vector<double> compressor_temporal_bounds(const CompressorData& data,
                                               const DecisionGrid& grid, int horizon) {
  std::vector<double> bounds(horizon, 0.0);
  const int n_axis = grid.counts()[0];
  for (int t = 0; t + 1 <= horizon; ++t) {
    double worst = std::abs(data.flow_lo[t + 1] - data.flow_lo[t]);
    worst = std::max(worst, std::abs(data.flow_hi[t + 1] - data.flow_hi[t]));
    worst = std::max(worst, std::abs(data.demand_rhs[t + 1] - data.demand_rhs[t]));
    double reward_delta = 0.0;
    for (int j = 0; j < 3; ++j) {
      double machine_worst = 0.0;
      for (int i = 0; i < n_axis; ++i) {
        const double flow_norm = (grid.axis_value(j, i) * kCompressorScale - 157.4) / 34.37;
        const double p0 = machine_power(flow_norm, data.head_norm[t]) /
                          ((1.0 - data.degradation(t, j)) * 1e7);
        const double p1 = machine_power(flow_norm, data.head_norm[t + 1]) /
                          ((1.0 - data.degradation(t + 1, j)) * 1e7);
        machine_worst = std::max(machine_worst, std::abs(p1 - p0));
      }
      reward_delta += machine_worst;
    }
    bounds[t] = kLipschitzInflation * std::max(worst, reward_delta);
  }
  return bounds;
}

}  // namespace

ProblemInstance compressor_problem(const CompressorTimeSeries& series, int horizon,
                                   int grid_n) {
  if (series.length() < static_cast<std::size_t>(horizon) + 1) {
    throw std::invalid_argument("compressor_problem: time series shorter than horizon");
  }
  const double k = kCompressorScale;
  auto data = std::make_shared<CompressorData>();
  data->flow_lo.resize(series.length());
  data->flow_hi.resize(series.length());
  data->demand_rhs.resize(series.length());
  data->head_norm.resize(series.length());
  data->degradation = series.degradation;
  for (std::size_t t = 0; t < series.length(); ++t) {
    const auto [lo, hi] = compressor_flow_bounds(series.head[t]);
    data->flow_lo[t] = lo / k;
    data->flow_hi[t] = hi / k;
    data->demand_rhs[t] = 0.67 * series.demand[t] / k;
    data->head_norm[t] = (series.head[t] - 1.016e5) / 3.210e4;
  }

  ProblemInstance problem;
  problem.name = "compressor";
  problem.grid = DecisionGrid(Eigen::Vector3d::Constant(50.0 / k),
                              Eigen::Vector3d::Constant(250.0 / k), {grid_n, grid_n, grid_n}, k);
  problem.horizon = horizon;
  problem.n_constraints = 7;
  problem.noise_std = 0.01;

  problem.reward = [data, k](const Eigen::VectorXd& x, int t) {
    double total = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double flow_norm = (x(j) * k - 157.4) / 34.37;
      total += machine_power(flow_norm, data->head_norm[t]) /
               ((1.0 - data->degradation(t, j)) * 1e7);
    }
    return -total;
  };
  problem.constraint = [data](const Eigen::VectorXd& x, int t, int i) {
    if (i < 6) {
      const int machine = i / 2;
      return i % 2 == 0 ? x(machine) - data->flow_lo[t] : data->flow_hi[t] - x(machine);
    }
    return x.sum() - data->demand_rhs[t];
  };

  const double seed_flow = series.demand[0] / (3.0 * k);
  problem.initial_safe_set = {
      problem.grid.nearest_index(Eigen::Vector3d::Constant(seed_flow))};

  problem.recommended_kernels.assign(8, KernelSpec::spatio_temporal(1.0, 80.0));
  problem.recommended_kernels[7] = KernelSpec::spatio_temporal(1.0, 70.0);

  // Constraint gradients are constant: unit for the flow box, sqrt(3) for
  // the demand halfspace.
  const double l_x = kLipschitzInflation * std::sqrt(3.0);
  problem.reference_lipschitz =
      finalize_schedule(l_x, compressor_temporal_bounds(*data, problem.grid, horizon));
  problem.validate();
  return problem;
}

Eigen::VectorXd evaluate_noisy(const ProblemInstance& problem, const Eigen::VectorXd& x,
                               int t, RandomStream& noise) {
  if (t < 0 || t > problem.horizon) throw std::invalid_argument("evaluate_noisy: bad time");
  Eigen::VectorXd y(problem.n_outputs());
  for (int i = 0; i < problem.n_outputs(); ++i) {
    y(i) = problem.output(x, t, i) + problem.noise_std * noise.normal();
  }
  return y;
}

std::vector<std::uint8_t> approx_feasible_mask(const ProblemInstance& problem,
                                               const CompressorTimeSeries& series, int t) {
  if (problem.name != "compressor") {
    throw std::invalid_argument("approx baseline: compressor problem required");
  }
  const double k = problem.grid.scale();
  const auto [lo_phys, hi_phys] = compressor_flow_bounds_linearized(series.head[t]);
  const double lo = lo_phys / k;
  const double hi = hi_phys / k;
  const double demand_rhs = 0.67 * series.demand[t] / k;
  std::vector<std::uint8_t> mask(problem.grid.size(), 0);
  for (GridIndex p = 0; p < problem.grid.size(); ++p) {
    const Eigen::VectorXd x = problem.grid.point(p);
    bool ok = x.sum() >= demand_rhs;
    for (int j = 0; ok && j < 3; ++j) ok = x(j) >= lo && x(j) <= hi;
    mask[p] = ok ? 1 : 0;
  }
  return mask;
}

ApproxDecision approx_optimization_baseline(const ProblemInstance& problem,
                                            const CompressorTimeSeries& series, int t) {
  const std::vector<std::uint8_t> mask = approx_feasible_mask(problem, series, t);
  ApproxDecision decision;
  double best = -kInf;
  for (GridIndex p = 0; p < problem.grid.size(); ++p) {
    if (!mask[p]) continue;
    const double value = problem.reward(problem.grid.point(p), t);
    if (value > best) {
      best = value;
      decision.feasible = true;
      decision.index = p;
    }
  }
  return decision;
}

ProblemInstance freeze_problem(const ProblemInstance& problem, int t0) {
  if (t0 < 0 || t0 > problem.horizon) throw std::invalid_argument("freeze_problem: bad time");
  ProblemInstance frozen = problem;
  frozen.name = problem.name + "-frozen";
  frozen.reward = [inner = problem.reward, t0](const Eigen::VectorXd& x, int /*t*/) {
    return inner(x, t0);
  };
  frozen.constraint = [inner = problem.constraint, t0](const Eigen::VectorXd& x, int /*t*/,
                                                       int i) { return inner(x, t0, i); };
  frozen.reference_lipschitz.l_t.assign(std::max(1, problem.horizon), 0.0);
  frozen.reference_lipschitz.l_bar = 0.0;
  return frozen;
}

}  // namespace tvsafeopt
