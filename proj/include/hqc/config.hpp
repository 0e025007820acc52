#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hqc/collapse.hpp"

namespace hqc {

enum class RunMode { kEvolve, kAnsatz, kStudy };
enum class InitialForm { kProduct, kCollapsed };
enum class AnsatzForm { kCorrelated, kCollapsed };

const char* to_string(RunMode m);
const char* to_string(InitialForm f);
const char* to_string(AnsatzForm f);

struct OutputOptions {
  std::filesystem::path directory = "hqc_out";
  bool diagnostics = true;
  bool violation = true;
  bool margins = true;
  bool snapshots = false;
  int snapshot_cadence = 0;  // steps; 0 means "every diagnostics tick"
  bool study_table = true;
};

struct RunConfig {
  std::string name = "scenario";
  RunMode mode = RunMode::kEvolve;
  InitialForm initial = InitialForm::kProduct;
  AnsatzForm ansatz = AnsatzForm::kCorrelated;
  MeasurementScenario scenario;
  std::string coupling_kind = "p";
  double coupling_scale = 1.0;
  std::vector<double> sigmas;
  int study_max_cells = 4096;
  OutputOptions output;

  std::vector<std::string> notices;  // non-fatal adjustments, e.g. amplitude normalisation
  std::vector<std::string> user_keys;  // "section.key" in file order
};

/// Every problem found in a config, not just the first.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// INI-style `key = value` text with sections [quantum], [classical],
/// [run] and optional [output]; `#` and `;` start comments.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// "section.key" -> resolved value for every key the parser knows.
std::vector<std::pair<std::string, std::string>> resolved_keys(const RunConfig& cfg);

}  // namespace hqc
