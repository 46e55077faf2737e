#include "tvsafeopt/run.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "tvsafeopt/interval.hpp"

namespace tvsafeopt {

namespace {

std::string fmt(double value, const char* spec = "%.15g") {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), spec, value);
  return buffer;
}

std::string fmt_cfg(double value) { return fmt(value, "%.17g"); }

bool to_double(const std::string& text, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(text, &used);
    return used == text.size();
  } catch (const std::exception&) {
    return false;
  }
}

bool to_int(const std::string& text, long long& out) {
  try {
    std::size_t used = 0;
    out = std::stoll(text, &used);
    return used == text.size();
  } catch (const std::exception&) {
    return false;
  }
}

std::vector<std::string> split_ws(const std::string& text) {
  std::istringstream stream(text);
  std::vector<std::string> tokens;
  std::string token;
  while (stream >> token) tokens.push_back(token);
  return tokens;
}

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

ParsedConfig parse_config(const std::string& text) {
  ParsedConfig parsed;
  RunConfig& config = parsed.config;
  std::istringstream stream(text);
  std::string line;
  std::string section;
  int line_no = 0;

  auto bad = [&](const std::string& message) {
    parsed.diagnostics.push_back("line " + std::to_string(line_no) + ": " + message);
  };

  while (std::getline(stream, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        bad("malformed section header");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      bad("expected key = value");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string qualified = section + "." + key;

    auto set_double = [&](double& field) {
      double v;
      if (to_double(value, v)) {
        field = v;
      } else {
        bad(qualified + ": bad number '" + value + "'");
      }
    };
    auto set_int = [&](int& field) {
      long long v;
      if (to_int(value, v)) {
        field = static_cast<int>(v);
      } else {
        bad(qualified + ": bad integer '" + value + "'");
      }
    };
    auto set_double_list = [&](std::vector<double>& field) {
      std::vector<double> values;
      for (const std::string& token : split_ws(value)) {
        double v;
        if (!to_double(token, v)) {
          bad(qualified + ": bad number '" + token + "'");
          return;
        }
        values.push_back(v);
      }
      field = std::move(values);
    };

    if (qualified == "run.problem") {
      config.problem = value;
    } else if (qualified == "run.variants") {
      config.variants = split_ws(value);
    } else if (qualified == "run.seeds") {
      std::vector<std::uint64_t> seeds;
      bool ok = true;
      for (const std::string& token : split_ws(value)) {
        long long v;
        if (!to_int(token, v) || v < 0) {
          bad(qualified + ": bad seed '" + token + "'");
          ok = false;
          break;
        }
        seeds.push_back(static_cast<std::uint64_t>(v));
      }
      if (ok) config.seeds = std::move(seeds);
    } else if (qualified == "run.horizon") {
      set_int(config.horizon);
    } else if (qualified == "run.out_dir") {
      config.out_dir = value;
    } else if (qualified == "run.inconsistency_policy") {
      config.inconsistency_policy = value;
    } else if (qualified == "run.noise_std") {
      set_double(config.noise_std);
    } else if (qualified == "run.threads") {
      set_int(config.threads);
    } else if (qualified == "beta.mode") {
      config.beta_mode = value;
    } else if (qualified == "beta.sqrt_beta") {
      set_double(config.sqrt_beta);
    } else if (qualified == "beta.rkhs_bound") {
      set_double(config.beta_rkhs_bound);
    } else if (qualified == "beta.delta") {
      set_double(config.beta_delta);
    } else if (qualified == "beta.capacity") {
      set_double_list(config.beta_capacity);
    } else if (qualified == "kernel.sigma1") {
      set_double(config.kernel_sigma1);
    } else if (qualified == "kernel.sigma2") {
      set_double_list(config.kernel_sigma2);
    } else if (qualified == "lipschitz.l_x") {
      set_double(config.lipschitz_l_x);
    } else if (qualified == "lipschitz.l_t") {
      set_double(config.lipschitz_l_t);
    } else if (qualified == "synthetic.grid_n") {
      set_int(config.synthetic_grid_n);
    } else if (qualified == "compressor.grid_n") {
      set_int(config.compressor_grid_n);
    } else if (qualified == "compressor.series_csv") {
      config.compressor_series_csv = value;
    } else if (qualified == "compressor.series_seed") {
      long long v;
      if (to_int(value, v) && v >= 0) {
        config.series_seed = static_cast<std::uint64_t>(v);
      } else {
        bad(qualified + ": bad seed '" + value + "'");
      }
    } else if (qualified == "compressor.demand_base") {
      set_double(config.series.demand_base);
    } else if (qualified == "compressor.demand_amplitude") {
      set_double(config.series.demand_amplitude);
    } else if (qualified == "compressor.demand_period") {
      set_double(config.series.demand_period);
    } else if (qualified == "compressor.demand_trend") {
      set_double(config.series.demand_trend);
    } else if (qualified == "compressor.head_base") {
      set_double(config.series.head_base);
    } else if (qualified == "compressor.head_amplitude") {
      set_double(config.series.head_amplitude);
    } else if (qualified == "compressor.head_period") {
      set_double(config.series.head_period);
    } else if (qualified == "compressor.head_trend") {
      set_double(config.series.head_trend);
    } else if (qualified == "compressor.degradation_slopes") {
      std::vector<double> slopes;
      set_double_list(slopes);
      if (slopes.size() == 3) {
        for (int j = 0; j < 3; ++j) config.series.degradation_slope[j] = slopes[j];
      } else if (!slopes.empty() || !value.empty()) {
        bad(qualified + ": expected exactly 3 values");
      }
    } else if (qualified == "compressor.jitter_std") {
      set_double(config.series.jitter_std);
    } else {
      bad("unknown key '" + qualified + "'");
    }
  }
  return parsed;
}

ParsedConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string emit_config(const RunConfig& config) {
  std::ostringstream out;
  out << "# tvsafeopt run configuration\n";
  out << "\n[run]\n";
  out << "problem = " << config.problem << "          # synthetic | compressor\n";
  out << "variants =";
  for (const std::string& v : config.variants) out << " " << v;
  out << "   # tvsafeopt | tvsafeopt-lf | safeopt | approx-baseline\n";
  out << "seeds =";
  for (std::uint64_t s : config.seeds) out << " " << s;
  out << "\n";
  out << "horizon = " << config.horizon << "\n";
  out << "out_dir = " << config.out_dir << "\n";
  out << "inconsistency_policy = " << config.inconsistency_policy
      << "   # fallback | strict\n";
  out << "noise_std = " << fmt_cfg(config.noise_std) << "\n";
  out << "threads = " << config.threads << "   # 0 = one per hardware thread\n";

  out << "\n[beta]\n";
  out << "mode = " << config.beta_mode << "   # fixed | theoretical\n";
  out << "sqrt_beta = " << fmt_cfg(config.sqrt_beta) << "\n";
  out << "rkhs_bound = " << fmt_cfg(config.beta_rkhs_bound) << "\n";
  out << "delta = " << fmt_cfg(config.beta_delta) << "\n";
  out << "capacity =";
  for (double c : config.beta_capacity) out << " " << fmt_cfg(c);
  out << "   # nondecreasing; last entry extends\n";

  out << "\n[kernel]\n";
  out << "sigma1 = " << fmt_cfg(config.kernel_sigma1) << "\n";
  out << "sigma2 =";
  for (double s : config.kernel_sigma2) out << " " << fmt_cfg(s);
  out << "   # per-output override; empty = problem defaults\n";

  out << "\n[lipschitz]\n";
  out << "l_x = " << fmt_cfg(config.lipschitz_l_x) << "   # < 0: problem reference\n";
  out << "l_t = " << fmt_cfg(config.lipschitz_l_t)
      << "   # < 0: reference sequence; >= 0: constant\n";

  out << "\n[synthetic]\n";
  out << "grid_n = " << config.synthetic_grid_n << "\n";

  out << "\n[compressor]\n";
  out << "grid_n = " << config.compressor_grid_n << "\n";
  out << "series_csv = " << config.compressor_series_csv
      << "   # path to t,M,H,d1,d2,d3 data; empty = generated\n";
  out << "series_seed = " << config.series_seed << "\n";
  out << "demand_base = " << fmt_cfg(config.series.demand_base) << "\n";
  out << "demand_amplitude = " << fmt_cfg(config.series.demand_amplitude) << "\n";
  out << "demand_period = " << fmt_cfg(config.series.demand_period) << "\n";
  out << "demand_trend = " << fmt_cfg(config.series.demand_trend) << "\n";
  out << "head_base = " << fmt_cfg(config.series.head_base) << "\n";
  out << "head_amplitude = " << fmt_cfg(config.series.head_amplitude) << "\n";
  out << "head_period = " << fmt_cfg(config.series.head_period) << "\n";
  out << "head_trend = " << fmt_cfg(config.series.head_trend) << "\n";
  out << "degradation_slopes = " << fmt_cfg(config.series.degradation_slope[0]) << " "
      << fmt_cfg(config.series.degradation_slope[1]) << " "
      << fmt_cfg(config.series.degradation_slope[2]) << "\n";
  out << "jitter_std = " << fmt_cfg(config.series.jitter_std) << "\n";
  return out.str();
}

std::vector<std::string> validate_config(const RunConfig& config) {
  std::vector<std::string> diagnostics;
  auto check = [&](bool ok, const std::string& message) {
    if (!ok) diagnostics.push_back(message);
  };

  const bool synthetic = config.problem == "synthetic";
  const bool compressor = config.problem == "compressor";
  check(synthetic || compressor, "run.problem: must be 'synthetic' or 'compressor'");
  check(!config.variants.empty(), "run.variants: at least one variant required");
  for (const std::string& v : config.variants) {
    const bool known =
        v == "tvsafeopt" || v == "tvsafeopt-lf" || v == "safeopt" || v == "approx-baseline";
    check(known, "run.variants: unknown variant '" + v + "'");
    if (v == "approx-baseline" && !compressor) {
      diagnostics.push_back(
          "run.variants: approx-baseline is only valid with the compressor problem");
    }
  }
  check(!config.seeds.empty(), "run.seeds: at least one seed required");
  check(config.horizon >= 1, "run.horizon: must be >= 1");
  check(config.noise_std > 0.0, "run.noise_std: must be > 0");
  check(config.inconsistency_policy == "fallback" || config.inconsistency_policy == "strict",
        "run.inconsistency_policy: must be 'fallback' or 'strict'");
  check(config.threads >= 0, "run.threads: must be >= 0");

  const bool fixed = config.beta_mode == "fixed";
  const bool theoretical = config.beta_mode == "theoretical";
  check(fixed || theoretical, "beta.mode: must be 'fixed' or 'theoretical'");
  if (fixed) check(config.sqrt_beta > 0.0, "beta.sqrt_beta: must be > 0");
  if (theoretical) {
    check(config.beta_rkhs_bound > 0.0, "beta.rkhs_bound: must be > 0");
    check(config.beta_delta > 0.0 && config.beta_delta < 1.0,
          "beta.delta: must lie in (0, 1)");
    check(!config.beta_capacity.empty(), "beta.capacity: sequence required");
    for (std::size_t i = 0; i < config.beta_capacity.size(); ++i) {
      if (config.beta_capacity[i] < 0.0 ||
          (i > 0 && config.beta_capacity[i] < config.beta_capacity[i - 1])) {
        diagnostics.push_back("beta.capacity: must be nonnegative and nondecreasing");
        break;
      }
    }
  }

  check(config.kernel_sigma1 > 0.0, "kernel.sigma1: must be > 0");
  for (double s : config.kernel_sigma2) check(s > 0.0, "kernel.sigma2: entries must be > 0");
  const std::size_t outputs = synthetic ? 2 : 8;
  check(config.kernel_sigma2.empty() || config.kernel_sigma2.size() == 1 ||
            config.kernel_sigma2.size() == outputs,
        "kernel.sigma2: expected 0, 1, or " + std::to_string(outputs) + " values");

  check(config.synthetic_grid_n >= 2, "synthetic.grid_n: must be >= 2");
  check(config.compressor_grid_n >= 2, "compressor.grid_n: must be >= 2");
  if (compressor) {
    check(config.series.demand_period > 0.0, "compressor.demand_period: must be > 0");
    check(config.series.head_period > 0.0, "compressor.head_period: must be > 0");
    check(config.series.jitter_std >= 0.0, "compressor.jitter_std: must be >= 0");
    for (double s : config.series.degradation_slope) {
      check(s >= 0.0, "compressor.degradation_slopes: entries must be >= 0");
    }
    if (!config.compressor_series_csv.empty()) {
      try {
        const CompressorTimeSeries series = load_timeseries(config.compressor_series_csv);
        check(series.length() >= static_cast<std::size_t>(config.horizon) + 1,
              "compressor.series_csv: series shorter than horizon + 1");
      } catch (const std::exception& error) {
        diagnostics.push_back(std::string("compressor.series_csv: ") + error.what());
      }
    }
  }
  return diagnostics;
}

// ---------------------------------------------------------------------------
// Study assembly
// ---------------------------------------------------------------------------

Study build_study(const RunConfig& config) {
  Study study;
  if (config.problem == "synthetic") {
    study.problem = synthetic_problem(config.horizon, config.synthetic_grid_n);
  } else if (config.problem == "compressor") {
    CompressorTimeSeries series =
        config.compressor_series_csv.empty()
            ? generate_timeseries(config.series, config.horizon, config.series_seed)
            : load_timeseries(config.compressor_series_csv);
    study.problem = compressor_problem(series, config.horizon, config.compressor_grid_n);
    study.series = std::move(series);
  } else {
    throw ConfigError("unknown problem: " + config.problem);
  }
  study.problem.noise_std = config.noise_std;
  study.problem.recommended_kernels = kernels_from(config, study.problem);
  return study;
}

BetaSchedule beta_schedule_from(const RunConfig& config) {
  if (config.beta_mode == "fixed") return BetaSchedule::fixed(config.sqrt_beta);
  if (config.beta_mode == "theoretical") {
    return BetaSchedule::theoretical(config.beta_rkhs_bound, config.noise_std,
                                     config.beta_delta, config.beta_capacity);
  }
  throw ConfigError("unknown beta mode: " + config.beta_mode);
}

LipschitzSchedule lipschitz_from(const RunConfig& config, const ProblemInstance& problem) {
  LipschitzSchedule schedule = problem.reference_lipschitz;
  if (config.lipschitz_l_x >= 0.0) schedule.l_x = config.lipschitz_l_x;
  if (config.lipschitz_l_t >= 0.0) {
    schedule.l_t.assign(std::max(1, problem.horizon), config.lipschitz_l_t);
    schedule.l_bar = config.lipschitz_l_t * std::max(1, problem.horizon);
  }
  return schedule;
}

std::vector<KernelSpec> kernels_from(const RunConfig& config, const ProblemInstance& problem) {
  std::vector<KernelSpec> kernels = problem.recommended_kernels;
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    double sigma2 = kernels[i].temporal_lengthscale;
    if (config.kernel_sigma2.size() == 1) {
      sigma2 = config.kernel_sigma2[0];
    } else if (config.kernel_sigma2.size() == kernels.size()) {
      sigma2 = config.kernel_sigma2[i];
    } else if (!config.kernel_sigma2.empty()) {
      throw ConfigError("kernel.sigma2: wrong number of entries");
    }
    kernels[i] = KernelSpec::spatio_temporal(config.kernel_sigma1, sigma2);
  }
  return kernels;
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

namespace {

void finalize_totals(RunResult& result) {
  double coverage_sum = 0.0;
  for (const IterationRecord& record : result.records) {
    result.total_unsafe += record.unsafe_count;
    coverage_sum += record.coverage_ratio;
    if (record.terminated && result.terminated_at < 0) result.terminated_at = record.k;
  }
  if (!result.records.empty()) {
    result.mean_coverage = coverage_sum / static_cast<double>(result.records.size());
    result.final_cumulative_regret = result.records.back().cumulative_regret;
  }
}

RunResult execute_approx_baseline(const Study& study, std::uint64_t seed) {
  if (!study.series) {
    throw ConfigError("approx-baseline requires the compressor problem");
  }
  const ProblemInstance& problem = study.problem;
  RunResult result;
  result.variant = "approx-baseline";
  result.seed = seed;
  double cumulative = 0.0;
  double cumulative_evaluated = 0.0;
  for (int t = 0; t <= problem.horizon; ++t) {
    const Mask truth = ground_truth_safe_region(problem, t);
    const Mask feasible = approx_feasible_mask(problem, *study.series, t);
    const SafetyMetrics metrics = safety_metrics(feasible, truth);

    IterationRecord record;
    record.k = t;
    record.t = t;
    record.safe_size = mask_count(feasible);
    record.unsafe_count = metrics.unsafe_count;
    record.unsafe_ratio = metrics.unsafe_ratio;
    record.coverage_ratio = metrics.coverage_ratio;

    GridIndex best = -1;
    double best_value = -kInf;
    for (GridIndex p = 0; p < problem.grid.size(); ++p) {
      if (!feasible[p]) continue;
      const double value = problem.reward(problem.grid.point(p), t);
      if (value > best_value) {
        best_value = value;
        best = p;
      }
    }
    record.x_k = best;
    record.x_hat = best;
    if (best < 0) record.unsafe_count += 1;  // no feasible point: a violation step
    regret_update(record, problem, t, record.x_hat, cumulative, truth);
    record.evaluated_reward = record.found_reward;
    cumulative = record.cumulative_regret;
    cumulative_evaluated = cumulative;
    result.records.push_back(record);
  }
  result.final_cumulative_evaluated_regret = cumulative_evaluated;
  finalize_totals(result);
  return result;
}

}  // namespace

RunResult execute_run(const Study& study, const RunConfig& config, const std::string& variant,
                      std::uint64_t seed) {
  if (variant == "approx-baseline") return execute_approx_baseline(study, seed);

  const ProblemInstance& problem = study.problem;
  RunResult result;
  result.variant = variant;
  result.seed = seed;

  const Variant kind = parse_variant(variant);
  const BetaSchedule beta = beta_schedule_from(config);
  const LipschitzSchedule lipschitz = lipschitz_from(config, problem);
  const InconsistencyPolicy policy = config.inconsistency_policy == "strict"
                                         ? InconsistencyPolicy::kStrict
                                         : InconsistencyPolicy::kFallbackToQ;

  SafeExploreRun run(problem, kind, beta, lipschitz, policy, seed);
  double cumulative = 0.0;
  double cumulative_evaluated = 0.0;

  auto make_record = [&](int k, int t, const Mask& safe, GridIndex x_k, GridIndex x_hat,
                         bool terminated) {
    IterationRecord record;
    record.k = k;
    record.t = t;
    record.terminated = terminated;
    const Mask truth = ground_truth_safe_region(problem, t);
    const SafetyMetrics metrics = safety_metrics(safe, truth);
    record.safe_size = mask_count(safe);
    record.unsafe_count = metrics.unsafe_count;
    record.unsafe_ratio = metrics.unsafe_ratio;
    record.coverage_ratio = metrics.coverage_ratio;
    record.x_k = x_k;
    record.x_hat = x_hat;
    regret_update(record, problem, t, x_hat, cumulative, truth);
    cumulative = record.cumulative_regret;
    if (x_k >= 0) {
      record.evaluated_reward = problem.reward(problem.grid.point(x_k), t);
      if (std::isfinite(record.optimal_reward)) {
        cumulative_evaluated += std::max(0.0, record.optimal_reward - record.evaluated_reward);
      }
    } else {
      record.evaluated_reward = std::numeric_limits<double>::quiet_NaN();
    }
    result.records.push_back(record);
  };

  // k = 0: seed set and the bootstrap query.
  make_record(0, 0, run.state().safe, run.state().x_k, run.state().x_hat, false);

  while (!run.done()) {
    const StepInfo info = run.step();
    make_record(info.k, info.t, run.state().safe, info.x_k, info.x_hat, info.terminated);
    if (info.terminated) break;
  }
  result.inconsistency_events = run.state().inconsistency_total;
  result.final_cumulative_evaluated_regret = cumulative_evaluated;
  finalize_totals(result);
  return result;
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

namespace {

std::string run_stem(const RunConfig& config, const std::string& variant, std::uint64_t seed) {
  return config.problem + "_" + variant + "_seed" + std::to_string(seed);
}

std::string serialize_decision(const ProblemInstance& problem, GridIndex index) {
  if (index < 0) return "";
  const Eigen::VectorXd x = problem.grid.point(index) * problem.grid.scale();
  std::string out;
  for (int a = 0; a < x.size(); ++a) {
    if (a) out += ";";
    out += fmt(x(a));
  }
  return out;
}

}  // namespace

std::string csv_path(const RunConfig& config, const std::string& variant, std::uint64_t seed) {
  return config.out_dir + "/" + run_stem(config, variant, seed) + ".csv";
}

std::string json_path(const RunConfig& config, const std::string& variant, std::uint64_t seed) {
  return config.out_dir + "/" + run_stem(config, variant, seed) + ".json";
}

void write_csv(const std::string& path, const RunConfig& config, const Study& study,
               const RunResult& result) {
  (void)config;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "k,t,variant,seed,safe_set_size,unsafe_count,unsafe_ratio,coverage_ratio,"
         "x_k,x_hat_k,found_reward,evaluated_reward,optimal_reward,instant_regret,"
         "cumulative_regret,terminated\n";
  for (const IterationRecord& r : result.records) {
    out << r.k << ',' << r.t << ',' << result.variant << ',' << result.seed << ','
        << r.safe_size << ',' << r.unsafe_count << ',' << fmt(r.unsafe_ratio) << ','
        << fmt(r.coverage_ratio) << ',' << serialize_decision(study.problem, r.x_k) << ','
        << serialize_decision(study.problem, r.x_hat) << ',' << fmt(r.found_reward) << ','
        << fmt(r.evaluated_reward) << ',' << fmt(r.optimal_reward) << ','
        << fmt(r.instant_regret) << ',' << fmt(r.cumulative_regret) << ','
        << (r.terminated ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_summary_json(const std::string& path, const RunConfig& config, const Study& study,
                        const RunResult& result) {
  nlohmann::json summary;
  summary["problem"] = config.problem;
  summary["variant"] = result.variant;
  summary["seed"] = result.seed;
  summary["horizon"] = config.horizon;
  summary["grid_counts"] = study.problem.grid.counts();
  summary["noise_std"] = config.noise_std;
  summary["iterations"] = result.records.size();
  summary["terminated_at"] = result.terminated_at;
  summary["total_unsafe"] = result.total_unsafe;
  summary["cumulative_regret"] = result.final_cumulative_regret;
  summary["cumulative_evaluated_regret"] = result.final_cumulative_evaluated_regret;
  summary["mean_coverage"] = result.mean_coverage;
  summary["inconsistency_events"] = result.inconsistency_events;
  const LipschitzSchedule lipschitz = lipschitz_from(config, study.problem);
  summary["lipschitz"] = {{"l_x", lipschitz.l_x}, {"l_bar", lipschitz.l_bar}};
  summary["effective_config"] = emit_config(config);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << summary.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

std::vector<RunResult> run_all(const RunConfig& config) {
  const std::vector<std::string> diagnostics = validate_config(config);
  if (!diagnostics.empty()) {
    std::string message = "invalid configuration:";
    for (const std::string& d : diagnostics) message += "\n  " + d;
    throw ConfigError(message);
  }

  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + config.out_dir);

  const Study study = build_study(config);
  {
    std::ofstream out(config.out_dir + "/effective_config.ini");
    if (!out) throw IoError("cannot write effective config");
    out << emit_config(config);
  }

  struct Job {
    std::string variant;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const std::string& variant : config.variants) {
    for (std::uint64_t seed : config.seeds) jobs.push_back({variant, seed});
  }

  std::vector<RunResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&]() {
    while (true) {
      const std::size_t index = next.fetch_add(1);
      if (index >= jobs.size()) return;
      try {
        RunResult result = execute_run(study, config, jobs[index].variant, jobs[index].seed);
        write_csv(csv_path(config, result.variant, result.seed), config, study, result);
        write_summary_json(json_path(config, result.variant, result.seed), config, study,
                           result);
        results[index] = std::move(result);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  unsigned n_threads = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                          : std::thread::hardware_concurrency();
  n_threads = std::max(1u, std::min<unsigned>(n_threads, jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned i = 0; i + 1 < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& thread : pool) thread.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

}  // namespace

ResultStats read_result_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::string expected =
      "k,t,variant,seed,safe_set_size,unsafe_count,unsafe_ratio,coverage_ratio,"
      "x_k,x_hat_k,found_reward,evaluated_reward,optimal_reward,instant_regret,"
      "cumulative_regret,terminated";
  if (line != expected) throw ConfigError(path + ": unexpected CSV header");

  ResultStats stats;
  stats.path = path;
  double coverage_sum = 0.0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_row(line);
    if (fields.size() != 16) {
      throw ConfigError(path + ": line " + std::to_string(line_no) + ": expected 16 fields");
    }
    long long k, seed, unsafe;
    double coverage, regret;
    if (!to_int(fields[0], k) || !to_int(fields[3], seed) || !to_int(fields[5], unsafe) ||
        !to_double(fields[7], coverage) || !to_double(fields[14], regret)) {
      throw ConfigError(path + ": line " + std::to_string(line_no) + ": bad field");
    }
    stats.iterations.push_back(static_cast<int>(k));
    stats.variant = fields[2];
    stats.seed = static_cast<std::uint64_t>(seed);
    stats.total_unsafe += unsafe;
    coverage_sum += coverage;
    stats.final_cumulative_regret = regret;
    if (stats.decision_dims == 0 && !fields[8].empty()) {
      stats.decision_dims = 1 + static_cast<int>(std::count(fields[8].begin(),
                                                            fields[8].end(), ';'));
    }
  }
  if (stats.iterations.empty()) throw ConfigError(path + ": no data rows");
  stats.mean_coverage = coverage_sum / static_cast<double>(stats.iterations.size());
  return stats;
}

Comparison compare_results(const std::vector<std::string>& paths) {
  if (paths.size() < 2) throw ConfigError("compare: at least two result files required");
  Comparison comparison;
  for (const std::string& path : paths) comparison.runs.push_back(read_result_csv(path));

  const ResultStats& first = comparison.runs.front();
  for (const ResultStats& run : comparison.runs) {
    if (run.seed != first.seed) {
      throw ConfigError("compare: result files use different seeds");
    }
    if (run.decision_dims != 0 && first.decision_dims != 0 &&
        run.decision_dims != first.decision_dims) {
      throw ConfigError("compare: result files come from different problems");
    }
    bool overlap = false;
    for (int k : run.iterations) {
      if (std::find(first.iterations.begin(), first.iterations.end(), k) !=
          first.iterations.end()) {
        overlap = true;
        break;
      }
    }
    if (!overlap) throw ConfigError("compare: no overlapping iterations");
  }

  const std::size_t n = comparison.runs.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  comparison.unsafe_reduction_pct.assign(n, std::vector<double>(n, 0.0));
  comparison.regret_change_pct.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double ua = static_cast<double>(comparison.runs[a].total_unsafe);
      const double ub = static_cast<double>(comparison.runs[b].total_unsafe);
      comparison.unsafe_reduction_pct[a][b] =
          ua == ub ? 0.0 : (ub == 0.0 ? nan : 100.0 * (ub - ua) / ub);
      const double ra = comparison.runs[a].final_cumulative_regret;
      const double rb = comparison.runs[b].final_cumulative_regret;
      comparison.regret_change_pct[a][b] =
          ra == rb ? 0.0 : (rb == 0.0 ? nan : 100.0 * (ra - rb) / rb);
    }
  }
  return comparison;
}

std::string format_comparison(const Comparison& comparison) {
  std::ostringstream out;
  for (std::size_t i = 0; i < comparison.runs.size(); ++i) {
    const ResultStats& run = comparison.runs[i];
    out << "run " << i << ": variant=" << run.variant << " seed=" << run.seed
        << " total_unsafe=" << run.total_unsafe
        << " cumulative_regret=" << fmt(run.final_cumulative_regret)
        << " mean_coverage=" << fmt(run.mean_coverage) << "\n";
  }
  out << "\nunsafe-count reduction of row vs column (%):\n";
  for (std::size_t a = 0; a < comparison.runs.size(); ++a) {
    for (std::size_t b = 0; b < comparison.runs.size(); ++b) {
      out << (b ? " " : "") << fmt(comparison.unsafe_reduction_pct[a][b], "%10.4g");
    }
    out << "\n";
  }
  out << "\ncumulative-regret change of row vs column (%):\n";
  for (std::size_t a = 0; a < comparison.runs.size(); ++a) {
    for (std::size_t b = 0; b < comparison.runs.size(); ++b) {
      out << (b ? " " : "") << fmt(comparison.regret_change_pct[a][b], "%10.4g");
    }
    out << "\n";
  }
  return out.str();
}

void write_comparison_json(const Comparison& comparison, const std::string& path) {
  nlohmann::json doc;
  for (const ResultStats& run : comparison.runs) {
    doc["runs"].push_back({{"path", run.path},
                           {"variant", run.variant},
                           {"seed", run.seed},
                           {"total_unsafe", run.total_unsafe},
                           {"cumulative_regret", run.final_cumulative_regret},
                           {"mean_coverage", run.mean_coverage}});
  }
  doc["unsafe_reduction_pct"] = comparison.unsafe_reduction_pct;
  doc["regret_change_pct"] = comparison.regret_change_pct;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace tvsafeopt
