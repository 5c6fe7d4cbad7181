#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ftrluq/dynamics.hpp"
#include "ftrluq/game.hpp"
#include "ftrluq/uncertainty.hpp"

namespace ftrluq {

// Thrown by config parsing; `where` is the JSON-pointer path of the
// offending key.
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& where_, const std::string& what_)
      : std::runtime_error(where_ + ": " + what_), where(where_) {}
  std::string where;
};

struct GameRef {
  std::string label;  // named game, or "custom" / "random" for inline ones
  Mat payoff;
};

struct ExperimentConfig {
  std::string experiment;  // registry name; empty for ad hoc configs
  std::string description;
  std::vector<GameRef> games;
  AlgorithmSpec algorithm;
  // Registry entries that contrast several rules on the same games;
  // empty means "just algorithm.rule".
  std::vector<UpdateRule> compare_rules;
  InitDistribution init;
  bool init_given = false;
  long horizon = 10000;
  long sample_every = 10;
  long ensemble_n = 500;
  std::uint64_t seed = 0;
  std::string output_dir;              // optional; CLI --out wins over it
  std::vector<double> snapshot_times;  // dispersion runs only
  std::vector<double> k_values;        // concentration checks only
};

// JSON in, validated config out. `path` may be "-" for stdin. Defaults:
// eta 0.05, horizon 10000, sample_every 10, ensemble_n 500. Unknown keys
// are rejected. A top-level "experiment" key pulls that registry entry's
// settings first; the remaining keys override them.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

struct RegistryEntry {
  std::string name;
  std::string description;
};

const std::vector<RegistryEntry>& experiment_registry();
bool is_registered_experiment(const std::string& name);
ExperimentConfig registry_config(const std::string& name);

void list_experiments(std::ostream& os);
// Prints the entry's description plus its resolved config as JSON.
// Unknown name: throws ConfigError listing valid names.
void describe_experiment(const std::string& name, std::ostream& os);

struct FileRecord {
  std::string path;  // relative to the output directory
  std::uint64_t bytes = 0;
  std::string sha256;
};

struct CheckRecord {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string output_dir;
  std::vector<CheckRecord> checks;
  std::vector<std::string> warnings;
  std::vector<FileRecord> files;  // everything emitted except the manifest
  bool all_passed = true;
};

// Executes the configured pipeline and emits CSVs, report.md and
// manifest.json into out_dir (atomic writes, no timestamps, forward-slash
// relative paths; identical config + seed gives identical bytes).
ExperimentReport run_experiment(const ExperimentConfig& config,
                                const std::string& out_dir);

// Precedence: cli_out, then config.output_dir, then $OUTPUT_DIR, then "out".
std::string resolve_output_dir(const std::string& cli_out,
                               const ExperimentConfig& config);

}  // namespace ftrluq
