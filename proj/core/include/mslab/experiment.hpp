#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mslab/serialize.hpp"

namespace mslab {

const char* version();

/// Malformed or inconsistent configuration; maps to exit status 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitFeasibility = 3;

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"freeness-scan",   "orbital-volume",    "chi-volume",
                                              "fubini-check",    "brownian-moments",  "packing-profile",
                                              "truncation-check", "brownian-dimension-proxy"};
  return names;
}

/// Flat `key = value` config. Grid keys take `[a, b, ...]`; `#` starts a comment.
struct ExperimentConfig {
  std::string experiment;
  std::vector<std::string> laws;  // one standard-law spec per group
  std::string joint = "free";     // "free" or "file:PATH"
  std::string base;               // JSON base tuples for strategy = fixed
  std::string strategy = "diagonalized";
  std::string sampler = "haar";  // haar | su
  std::vector<int> N{4};
  std::vector<int> m{2};
  std::vector<double> delta{0.1};
  std::vector<double> R{std::numeric_limits<double>::infinity()};
  std::vector<double> epsilon;
  std::vector<double> t;
  std::uint64_t samples = 1000;
  std::uint64_t inner_samples = 100;
  std::uint64_t budget = 1'000'000;
  std::uint64_t paths = 100;
  int steps = 100;
  double spike = 0.0;
  std::uint64_t seed = 0;
  int workers = 1;
  /// Keys as written (minus `workers`), echoed into every record.
  std::vector<std::pair<std::string, std::string>> raw;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Sets a key from its textual value, as the parser would (used for CLI overrides).
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Static problems (empty when the config can run); no sampling.
std::vector<std::string> validate(const ExperimentConfig& config);

struct RunResult {
  int exit_code = kExitOk;
  std::vector<Json> records;
  std::vector<std::string> diagnostics;
};

/// Runs every grid point; failed points yield status "failed" records and exit 3.
RunResult run(const ExperimentConfig& config);

/// Records ordered by (stream, row): independent of scheduling.
void canonical_sort(std::vector<Json>& records);
std::string format_jsonl(const std::vector<Json>& records);
std::string format_csv(const std::vector<Json>& records);

}  // namespace mslab
