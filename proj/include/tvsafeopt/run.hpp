#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tvsafeopt/metrics.hpp"
#include "tvsafeopt/problems.hpp"
#include "tvsafeopt/safe_explore.hpp"

namespace tvsafeopt {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Every experimental knob, serialized to/from a sectioned key-value file
/// (see emit_config for the documented layout).
struct RunConfig {
  // [run]
  std::string problem = "synthetic";
  std::vector<std::string> variants = {"tvsafeopt", "safeopt"};
  std::vector<std::uint64_t> seeds = {0};
  int horizon = 200;
  std::string out_dir = "results";
  std::string inconsistency_policy = "fallback";  // fallback | strict
  double noise_std = 0.01;
  int threads = 0;  // 0 = one per hardware thread

  // [beta]
  std::string beta_mode = "fixed";  // fixed | theoretical
  double sqrt_beta = 2.0;
  double beta_rkhs_bound = 1.0;
  double beta_delta = 0.1;
  std::vector<double> beta_capacity = {10.0};

  // [kernel]
  double kernel_sigma1 = 1.0;
  std::vector<double> kernel_sigma2 = {};  // empty: problem defaults; one value broadcasts

  // [lipschitz] — negative values select the problem's reference values
  double lipschitz_l_x = -1.0;
  double lipschitz_l_t = -1.0;

  // [synthetic]
  int synthetic_grid_n = 100;

  // [compressor]
  int compressor_grid_n = 60;
  std::string compressor_series_csv = "";
  std::uint64_t series_seed = 7;
  TimeSeriesParams series;

  bool operator==(const RunConfig&) const = default;
};

/// Parses the sectioned key-value format. Malformed lines and unknown keys
/// come back as diagnostics; values that did parse are applied.
struct ParsedConfig {
  RunConfig config;
  std::vector<std::string> diagnostics;
};
ParsedConfig parse_config(const std::string& text);
ParsedConfig parse_config_file(const std::string& path);

/// Serializes a config; parse_config(emit_config(c)).config == c.
std::string emit_config(const RunConfig& config);

/// Semantic checks; each violation names the offending field.
std::vector<std::string> validate_config(const RunConfig& config);

/// Problem plus the exogenous series the compressor variants share.
struct Study {
  ProblemInstance problem;
  std::optional<CompressorTimeSeries> series;
};
Study build_study(const RunConfig& config);

BetaSchedule beta_schedule_from(const RunConfig& config);
LipschitzSchedule lipschitz_from(const RunConfig& config, const ProblemInstance& problem);
std::vector<KernelSpec> kernels_from(const RunConfig& config, const ProblemInstance& problem);

struct RunResult {
  std::string variant;
  std::uint64_t seed = 0;
  std::vector<IterationRecord> records;
  std::int64_t total_unsafe = 0;
  double final_cumulative_regret = 0.0;
  double final_cumulative_evaluated_regret = 0.0;
  double mean_coverage = 0.0;
  int terminated_at = -1;  // iteration of termination, -1 if none
  std::int64_t inconsistency_events = 0;
};

/// One (variant, seed) execution; deterministic given (config, seed).
RunResult execute_run(const Study& study, const RunConfig& config, const std::string& variant,
                      std::uint64_t seed);

/// Full study: every (variant, seed) pair, parallel across pairs, one CSV
/// and one summary JSON per run plus the effective config; returns results
/// in (variant-major, seed-minor) order. Throws IoError on write failures.
std::vector<RunResult> run_all(const RunConfig& config);

std::string csv_path(const RunConfig& config, const std::string& variant, std::uint64_t seed);
std::string json_path(const RunConfig& config, const std::string& variant, std::uint64_t seed);

void write_csv(const std::string& path, const RunConfig& config, const Study& study,
               const RunResult& result);
void write_summary_json(const std::string& path, const RunConfig& config, const Study& study,
                        const RunResult& result);

/// Totals of one emitted per-iteration CSV.
struct ResultStats {
  std::string path;
  std::string variant;
  std::uint64_t seed = 0;
  std::vector<int> iterations;
  std::int64_t total_unsafe = 0;
  double final_cumulative_regret = 0.0;
  double mean_coverage = 0.0;
  int decision_dims = 0;
};
ResultStats read_result_csv(const std::string& path);

/// Pairwise comparison of >= 2 result files over the same problem/seed.
struct Comparison {
  std::vector<ResultStats> runs;
  // [a][b]: percent by which run a's total is below run b's (unsafe) or
  // above run b's (regret); NaN when the reference total is zero.
  std::vector<std::vector<double>> unsafe_reduction_pct;
  std::vector<std::vector<double>> regret_change_pct;
};
Comparison compare_results(const std::vector<std::string>& paths);
std::string format_comparison(const Comparison& comparison);
void write_comparison_json(const Comparison& comparison, const std::string& path);

}  // namespace tvsafeopt
