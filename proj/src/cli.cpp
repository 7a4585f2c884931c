#include "smartfl/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "smartfl/checks.hpp"
#include "smartfl/config.hpp"
#include "smartfl/errors.hpp"
#include "smartfl/experiment.hpp"
#include "smartfl/metrics.hpp"

namespace smartfl {

namespace {

constexpr const char* kOutputDirEnv = "SMARTFL_OUTPUT_DIR";

MetricsFormat format_for(const std::filesystem::path& path, MetricsFormat configured) {
  if (path.extension() == ".json") return MetricsFormat::kJson;
  if (path.extension() == ".csv") return MetricsFormat::kCsv;
  return configured;
}

void run_and_write(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  const RunResult result = run(cfg);
  for (const auto& r : result.records) {
    if (!r.warning.empty()) std::cerr << "warning: round " << r.round << ": " << r.warning << '\n';
  }
  write_metrics(result.records, out, format_for(out, cfg.format));
  std::cout << to_string(cfg.aggregation.strategy) << " seed=" << cfg.seed
            << " rounds=" << cfg.rounds << " final_acc=" << final_accuracy(result.records)
            << " best_acc=" << best_accuracy(result.records) << " -> " << out.string() << '\n';
}

std::vector<std::string> split_values(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

std::filesystem::path resolve_output_path(const std::string& requested) {
  std::filesystem::path path(requested);
  if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0') {
    return std::filesystem::path(dir) / path.filename();
  }
  return path;
}

std::filesystem::path sweep_output_path(const std::filesystem::path& base, const std::string& key,
                                        const std::string& value) {
  std::string tag = key + "=" + value;
  for (char& c : tag) {
    if (c == '/' || c == '\\' || c == ' ') c = '_';
  }
  std::filesystem::path out = base;
  out.replace_filename(base.stem().string() + "_" + tag + base.extension().string());
  return out;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Federated learning simulator with proxy-optimized aggregation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  std::string param;
  std::string values;

  auto* run_cmd = app.add_subcommand("run", "Run one experiment");
  run_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Override the master seed");
  run_cmd->add_option("--out", out_path, "Metrics output path (.csv or .json)");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run one experiment per value of a config key");
  sweep_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();
  sweep_cmd->add_option("--param", param, "Dotted config key, e.g. federation.alpha")->required();
  sweep_cmd->add_option("--values", values, "Comma-separated values")->required();
  sweep_cmd->add_option("--out", out_path, "Base metrics output path");

  auto* check_cmd = app.add_subcommand("check", "Run the invariant and property suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfigError;
  }

  try {
    if (check_cmd->parsed()) {
      return run_checks(std::cout) ? kExitOk : kExitRuntimeError;
    }
    nlohmann::json doc = read_config_file(config_path);
    if (run_cmd->parsed()) {
      ExperimentConfig cfg = config_from_json(doc);
      if (seed_opt->count() > 0) cfg.seed = seed;
      run_and_write(cfg, resolve_output_path(out_path.empty() ? cfg.output : out_path));
      return kExitOk;
    }
    const auto list = split_values(values);
    if (list.empty()) throw ConfigError("sweep: --values is empty");
    for (const auto& v : list) {
      nlohmann::json variant = doc;
      apply_override(variant, param, v);
      const ExperimentConfig cfg = config_from_json(variant);
      const auto base = resolve_output_path(out_path.empty() ? cfg.output : out_path);
      run_and_write(cfg, sweep_output_path(base, param, v));
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const FormatError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const InapplicableError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kExitRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
}

}  // namespace smartfl
