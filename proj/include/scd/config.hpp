#pragma once

// Run configuration: JSON file with unit-suffixed keys, validated on load.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scd/rates.hpp"
#include "scd/rescale.hpp"
#include "scd/tau_leap.hpp"

namespace scd {

struct RunControl {
  std::optional<double> until_time_s;
  std::optional<double> until_dose_dpa;
  std::uint64_t seed = 1;
  int replicas = 1;
  bool tau_leaping = false;
  bool volume_rescaling = false;
  bool incremental_updates = true;
  double sample_start_s = 1e-3;
  int samples_per_decade = 64;
  std::int64_t checkpoint_every_steps = 0;  // 0 disables checkpoints
  bool step_log = false;
  std::int64_t recompute_every = 10000;  // sweeps between exact rate resyncs
  std::string out_dir;
};

struct RunConfig {
  Model model;
  double volume_m3 = 0.0;
  std::vector<StoichTerm> initial_species;
  RunControl run;
  LeapControl leap;
  RescaleConfig rescale;

  /// Throws ConfigError on any inconsistency.
  void validate() const;
};

RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
/// Inverse of parse_config: parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& cfg);

/// Stable 64-bit FNV-1a digest of the physics sections (catalogs, volume,
/// initial state), as 16 hex digits.
std::string physics_digest(const RunConfig& cfg);

}  // namespace scd
