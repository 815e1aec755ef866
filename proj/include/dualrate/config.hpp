#pragma once

#include "dualrate/error.hpp"
#include "dualrate/experiment_harness.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dualrate {

/// Validation failure tied to one configuration key.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& message)
      : Error(ErrorCategory::validation, key + ": " + message), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Experiment settings plus the options of the individual subcommands.
struct RunConfig {
  ExperimentConfig experiment;
  std::string command;
  std::vector<std::string> signals{"g1", "g2", "g3", "g4"};
  std::string table = "mise";
  std::string mode = "dual";
  double rate = 100.0;           // constant-mode rate for `estimate`
  std::uint32_t replication = 0;
  std::string family = "daub";
  double step = 0.01;            // emit-signal spacing

  void validate() const;
};

struct KeyValue {
  std::string key;
  std::string value;
  std::string origin;  // "file:line" or "--flag"
};

/// Keys accepted in files and as --key flags, in rendering order.
const std::vector<std::string>& config_keys();

/// Flat `key = value` lines; '#' starts a comment; blank lines are skipped.
std::vector<KeyValue> parse_key_values(const std::string& text, const std::string& origin);

/// Throws ConfigError for an unknown key or a value of the wrong type.
void apply(RunConfig& cfg, const KeyValue& kv);

/// Defaults, then the file, then overrides. The seed falls back to
/// DUALRATE_SEED when neither sets it. The result is validated.
RunConfig resolve_config(const std::optional<std::filesystem::path>& file,
                         const std::vector<KeyValue>& overrides);

/// Every key with its resolved value, one `key=value` line each.
std::string render_config(const RunConfig& cfg);

struct ManifestInfo {
  std::vector<std::string> artifacts;
  double wall_clock_seconds = 0.0;
  int jobs = 1;
};

/// The resolved configuration preceded by comment lines for version,
/// artifacts and timing; it parses back as a config file.
std::string render_manifest(const RunConfig& cfg, const ManifestInfo& info);

std::string_view tool_version();

}  // namespace dualrate
