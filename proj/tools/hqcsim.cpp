// hqcsim: config-driven driver for hybrid quantum-classical measurement runs.
//
//   hqcsim simulate <config>   run the configured mode (exit 0 clean, 2 violation, 1 failure)
//   hqcsim describe <config>   print the resolved scenario without stepping
//   hqcsim study <config>      run the sigma sweep of the config
//
// HQC_THREADS=<n> overrides the OpenMP thread count.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hqc/runner.hpp"

namespace {

int load_or_report(const std::string& path, hqc::RunConfig& cfg) {
  try {
    cfg = hqc::load_config(path);
    return hqc::kExitClean;
  } catch (const hqc::ConfigError& e) {
    std::cerr << path << ": " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << path << ": " << e.what() << '\n';
  }
  return hqc::kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid quantum-classical dynamics simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_override;

  auto* simulate = app.add_subcommand("simulate", "Run the scenario described by a config file");
  simulate->add_option("config", config_path, "INI config")->required()->check(CLI::ExistingFile);
  simulate->add_option("-o,--output", output_override, "Override [output] directory");

  auto* describe = app.add_subcommand("describe", "Print the resolved scenario and estimates");
  describe->add_option("config", config_path, "INI config")->required()->check(CLI::ExistingFile);

  auto* study = app.add_subcommand("study", "Run the delta-limit sweep over [run] sigmas");
  study->add_option("config", config_path, "INI config")->required()->check(CLI::ExistingFile);
  study->add_option("-o,--output", output_override, "Override [output] directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hqc::kExitFailure;
  }

  const int threads = hqc::apply_thread_override();

  hqc::RunConfig cfg;
  if (const int rc = load_or_report(config_path, cfg); rc != hqc::kExitClean) return rc;
  if (!output_override.empty()) cfg.output.directory = output_override;

  if (*describe) {
    std::cout << hqc::describe(cfg);
    std::cout << "threads: " << threads << '\n';
    return hqc::kExitClean;
  }
  if (*study) {
    if (cfg.sigmas.empty()) {
      std::cerr << config_path << ": study needs [run] sigmas\n";
      return hqc::kExitFailure;
    }
    cfg.mode = hqc::RunMode::kStudy;
  }
  return hqc::run(cfg, std::cerr);
}
