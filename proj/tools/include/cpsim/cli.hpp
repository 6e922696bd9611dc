#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "cpsim/config.hpp"

namespace cpsim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailedCells = 1;  // sweep finished but some cells failed
inline constexpr int kExitUsage = 2;        // bad arguments, configuration or I/O

// Overrides shared by `run` and `sweep`. Applied on top of the config file in
// the order: --set entries, then seed, duration, density, policy, gamma.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::optional<std::string> policy;
  std::optional<double> gamma;
  std::optional<double> density;
  std::vector<std::string> set;  // "dotted.key=value"
};

SimConfig apply_overrides(SimConfig config, const RunOverrides& overrides);

// One sweep axis: a name (policy, gamma, density, seed, or any dotted config
// key) and its values. Policy values are "etsi" or "accuracy[:gamma]".
struct SweepAxis {
  std::string name;
  std::vector<std::string> values;
};

// Parses "name=v1,v2,...". Throws ConfigError.
SweepAxis parse_axis(const std::string& text);

// Applies one axis value to a configuration.
SimConfig apply_axis_value(SimConfig config, const std::string& axis, const std::string& value);

// Directory name unique per run: UTC timestamp plus the first 8 hex digits of
// the effective-config digest.
std::string run_directory_name(const SimConfig& config);

// Output root: --out-dir, else $CPSIM_OUTPUT_ROOT, else ./runs.
std::filesystem::path output_root(const std::optional<std::string>& flag);

// Entry point of the `cpsim` executable; returns the process exit code.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace cpsim
