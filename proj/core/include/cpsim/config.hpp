#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "cpsim/channel.hpp"
#include "cpsim/kalman.hpp"
#include "cpsim/metrics.hpp"
#include "cpsim/mobility.hpp"
#include "cpsim/policy.hpp"
#include "cpsim/sensor.hpp"

namespace cpsim {

struct SimConfig {
  ScenarioSpec scenario;
  SensorParams sensor;
  MotionModelParams motion_model;
  PolicyConfig policy;
  RadioParams radio;
  MetricsConfig metrics;
  std::uint64_t seed = 1;
  double duration = 120.0;  // s
  double tick = 0.1;        // s

  // Throws ConfigError naming the first offending field.
  void validate() const;

  // Ticks per sensor scan / policy check / CBR window.
  long sensor_every() const;
  long policy_every() const;
  long cbr_every() const;
};

// Canonical JSON text of the full configuration: every key present, fixed key
// order, two-space indentation. Loading it back yields an identical config.
std::string to_json_text(const SimConfig& config);

// Parses YAML or JSON text. Keys absent from the text keep their defaults;
// unknown keys and type mismatches raise ConfigError. The result is validated.
SimConfig parse_config_text(std::string_view text);

// Reads a configuration file. Missing or unreadable files raise IoError.
SimConfig load_config_file(const std::filesystem::path& path);

// Sets one dotted key ("policy.gamma", "scenario.comms_region") from its text
// form (YAML scalar or flow sequence) and re-validates.
SimConfig with_override(const SimConfig& config, std::string_view key, std::string_view value);

// Stable 64-bit FNV-1a digest of to_json_text(config).
std::uint64_t config_digest(const SimConfig& config);

}  // namespace cpsim
