#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tvsafeopt/run.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;

int cmd_run(const std::string& config_path, const std::vector<std::string>& variants,
            const std::vector<std::uint64_t>& seeds, int horizon, const std::string& out_dir) {
  tvsafeopt::RunConfig config;
  if (!config_path.empty()) {
    const tvsafeopt::ParsedConfig parsed = tvsafeopt::parse_config_file(config_path);
    if (!parsed.diagnostics.empty()) {
      for (const std::string& d : parsed.diagnostics) std::cerr << config_path << ": " << d << "\n";
      return kExitConfig;
    }
    config = parsed.config;
  }
  if (!variants.empty()) config.variants = variants;
  if (!seeds.empty()) config.seeds = seeds;
  if (horizon > 0) config.horizon = horizon;
  if (!out_dir.empty()) config.out_dir = out_dir;

  const std::vector<std::string> diagnostics = tvsafeopt::validate_config(config);
  if (!diagnostics.empty()) {
    for (const std::string& d : diagnostics) std::cerr << d << "\n";
    return kExitConfig;
  }

  const std::vector<tvsafeopt::RunResult> results = tvsafeopt::run_all(config);
  for (const tvsafeopt::RunResult& result : results) {
    std::cout << result.variant << " seed " << result.seed << ": "
              << result.records.size() << " rows, total_unsafe=" << result.total_unsafe
              << ", cumulative_regret=" << result.final_cumulative_regret;
    if (result.terminated_at >= 0) std::cout << ", terminated at k=" << result.terminated_at;
    std::cout << " -> " << tvsafeopt::csv_path(config, result.variant, result.seed) << "\n";
  }
  return kExitOk;
}

int cmd_compare(const std::vector<std::string>& paths, const std::string& out_json) {
  const tvsafeopt::Comparison comparison = tvsafeopt::compare_results(paths);
  std::cout << tvsafeopt::format_comparison(comparison);
  if (!out_json.empty()) tvsafeopt::write_comparison_json(comparison, out_json);
  return kExitOk;
}

int cmd_validate(const std::string& config_path) {
  const tvsafeopt::ParsedConfig parsed = tvsafeopt::parse_config_file(config_path);
  std::vector<std::string> diagnostics = parsed.diagnostics;
  const std::vector<std::string> semantic = tvsafeopt::validate_config(parsed.config);
  diagnostics.insert(diagnostics.end(), semantic.begin(), semantic.end());
  if (diagnostics.empty()) {
    std::cout << "ok: no diagnostics\n";
  } else {
    for (const std::string& d : diagnostics) std::cout << d << "\n";
  }
  return kExitOk;
}

int cmd_emit_default(const std::string& out_path) {
  const std::string text = tvsafeopt::emit_config(tvsafeopt::RunConfig{});
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) throw tvsafeopt::IoError("cannot write " + out_path);
    out << text;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe Bayesian optimization of time-varying problems"};
  app.require_subcommand(1);

  std::string config_path, out_dir, out_json;
  std::vector<std::string> variants, paths;
  std::vector<std::uint64_t> seeds;
  int horizon = 0;

  CLI::App* run = app.add_subcommand("run", "execute configured experiment runs");
  run->add_option("--config", config_path, "configuration file");
  run->add_option("--variant", variants, "override the variant list");
  run->add_option("--seed", seeds, "override the seed list");
  run->add_option("--horizon", horizon, "override the horizon");
  run->add_option("--out", out_dir, "output directory")->envname("TVSAFEOPT_OUT_DIR");

  CLI::App* compare = app.add_subcommand("compare", "compare emitted result CSVs");
  compare->add_option("paths", paths, "result CSV paths")->required()->expected(-2);
  compare->add_option("--out", out_json, "write the comparison as JSON");

  CLI::App* validate = app.add_subcommand("validate", "check a configuration file");
  validate->add_option("config", config_path, "configuration file")->required();

  CLI::App* emit = app.add_subcommand("emit-default-config", "print the default configuration");
  emit->add_option("--out", config_path, "write to a file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, variants, seeds, horizon, out_dir);
    if (compare->parsed()) return cmd_compare(paths, out_json);
    if (validate->parsed()) return cmd_validate(config_path);
    if (emit->parsed()) return cmd_emit_default(config_path);
  } catch (const tvsafeopt::ConfigError& error) {
    std::cerr << "error: " << error.what() << "\n";
    return kExitConfig;
  } catch (const tvsafeopt::IoError& error) {
    std::cerr << "error: " << error.what() << "\n";
    return kExitIo;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
