#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mslab/error.hpp"
#include "mslab/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo experiments on matricial and orbital microstates"};
  app.set_version_flag("--version", std::string(mslab::version()));

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out_path;
  std::string format = "jsonl";
  bool validate_only = false;

  app.add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Root seed (overrides the config)");
  app.add_option("--workers", workers, "Worker threads (default: MICROSTATE_LAB_WORKERS, then the config)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out_path, "Output file (default: stdout)");
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"jsonl", "csv"}));
  app.add_flag("--validate-only", validate_only, "Check the config and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mslab::kExitUsage;
  }

  mslab::ExperimentConfig cfg;
  try {
    cfg = mslab::load_config(config_path);
    if (seed) mslab::set_config_value(cfg, "seed", std::to_string(*seed));
    if (workers) {
      cfg.workers = *workers;
    } else if (const char* env = std::getenv("MICROSTATE_LAB_WORKERS")) {
      mslab::set_config_value(cfg, "workers", env);
    }
  } catch (const std::exception& e) {
    std::cerr << "mslab: " << e.what() << '\n';
    return mslab::kExitUsage;
  }

  if (validate_only) {
    const auto problems = mslab::validate(cfg);
    for (const auto& p : problems) std::cout << "problem: " << p << '\n';
    if (problems.empty()) std::cout << "ok\n";
    return problems.empty() ? mslab::kExitOk : mslab::kExitUsage;
  }

  mslab::RunResult result;
  try {
    result = mslab::run(cfg);
  } catch (const mslab::ConfigError& e) {
    std::cerr << "mslab: " << e.what() << '\n';
    return mslab::kExitUsage;
  } catch (const mslab::InvalidInput& e) {
    std::cerr << "mslab: " << e.what() << '\n';
    return mslab::kExitUsage;
  }
  for (const auto& d : result.diagnostics) std::cerr << "mslab: " << d << '\n';

  const std::string text = format == "csv" ? mslab::format_csv(result.records) : mslab::format_jsonl(result.records);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "mslab: cannot write " << out_path << '\n';
      return mslab::kExitUsage;
    }
    out << text;
  }
  return result.exit_code;
}
