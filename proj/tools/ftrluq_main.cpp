// Command line front end: run experiments from JSON configs, inspect the
// registry, or run the acceptance suite. Exit codes: 0 all checks passed,
// 1 at least one check failed, 2 usage or runtime error.

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ftrluq/acceptance.hpp"
#include "ftrluq/experiment.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir,
            bool seed_given, std::uint64_t seed) {
  ftrluq::ExperimentConfig cfg = ftrluq::parse_config(config_path);
  if (seed_given) cfg.seed = seed;
  const std::string dir = ftrluq::resolve_output_dir(out_dir, cfg);
  const ftrluq::ExperimentReport report = ftrluq::run_experiment(cfg, dir);
  for (const auto& c : report.checks) {
    std::cout << (c.passed ? "pass " : "FAIL ") << c.name << ": " << c.detail
              << "\n";
  }
  for (const auto& w : report.warnings) std::cout << "warn " << w << "\n";
  std::cout << "report: " << dir << "/report.md\n";
  std::cout << "manifest: " << dir << "/manifest.json\n";
  return report.all_passed ? 0 : 1;
}

int cmd_verify(const std::string& out_dir, std::uint64_t seed) {
  ftrluq::ExperimentConfig dummy;
  const std::string dir =
      ftrluq::resolve_output_dir(out_dir, dummy) + "/acceptance";
  return ftrluq::run_acceptance(seed, dir, std::cout) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uncertainty propagation for FTRL dynamics in zero-sum games"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;

  CLI::App* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("--config", config_path,
                  "path to the config file, or - for stdin")
      ->required();
  run->add_option("--out", out_dir, "output directory (wins over config and env)");
  CLI::Option* seed_opt =
      run->add_option("--seed", seed, "override the config seed");

  CLI::App* list = app.add_subcommand("list", "list the registered experiments");

  std::string name;
  CLI::App* describe =
      app.add_subcommand("describe", "show one experiment's resolved config");
  describe->add_option("name", name, "registered experiment name")->required();

  std::string verify_out;
  std::uint64_t verify_seed = 1729;
  CLI::App* verify = app.add_subcommand("verify", "run the acceptance suite");
  verify->add_option("--seed", verify_seed, "acceptance suite seed");
  verify->add_option("--out", verify_out, "directory for acceptance artifacts");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, seed_opt->count() > 0, seed);
    if (list->parsed()) {
      ftrluq::list_experiments(std::cout);
      return 0;
    }
    if (describe->parsed()) {
      ftrluq::describe_experiment(name, std::cout);
      return 0;
    }
    if (verify->parsed()) return cmd_verify(verify_out, verify_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
