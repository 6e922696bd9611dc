#include "cpsim/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <sstream>

#include <CLI11.hpp>

#include "cpsim/engine.hpp"
#include "cpsim/error.hpp"
#include "cpsim/export.hpp"

namespace cpsim {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y%m%dT%H%M%SZ", &tm);
  return buffer;
}

std::string hex8(std::uint64_t digest) {
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(digest));
  return std::string(buffer, 8);
}

// Appends -2, -3, ... until the path does not exist.
std::filesystem::path fresh_path(const std::filesystem::path& base) {
  if (!std::filesystem::exists(base)) return base;
  for (int i = 2;; ++i) {
    std::filesystem::path candidate = base;
    candidate += "-" + std::to_string(i);
    if (!std::filesystem::exists(candidate)) return candidate;
  }
}

SimConfig load_base(const std::optional<std::string>& path) {
  return path ? load_config_file(*path) : SimConfig{};
}

void print_run_summary(std::ostream& out, const RunSummary& s, const std::filesystem::path& dir) {
  const auto mean = [](const BoxStats& b) { return b.values ? format_number(b.values->mean) : std::string("n/a"); };
  out << "mean CBR          " << mean(s.cbr) << "  (" << s.cbr.count << " samples)\n"
      << "mean OTE [m]      " << mean(s.ote) << "  (" << s.ote.count << " samples)\n"
      << "mean OTE >85 m    " << mean(s.ote_far) << '\n'
      << "CPMs generated    " << s.cpms_generated << '\n'
      << "frames sent       " << s.channel.transmitted << '\n'
      << "frames collided   " << s.channel.frames_with_collision << '\n'
      << "artifacts         " << dir.string() << '\n';
}

void add_override_options(CLI::App& cmd, RunOverrides& o, std::optional<std::string>& config_path) {
  cmd.add_option("-c,--config", config_path, "Configuration file (YAML or JSON)");
  cmd.add_option("--seed", o.seed, "Master seed");
  cmd.add_option("--duration", o.duration, "Simulated seconds");
  cmd.add_option("--policy", o.policy, "etsi or accuracy");
  cmd.add_option("--gamma", o.gamma, "Divergence threshold of the accuracy policy");
  cmd.add_option("--density", o.density, "Target density, vehicles per km");
  cmd.add_option("--set", o.set, "Override any key: dotted.key=value (repeatable)");
}

struct Cell {
  std::string label;
  std::vector<std::pair<std::string, std::string>> values;
};

std::vector<Cell> cartesian(const std::vector<SweepAxis>& axes) {
  std::vector<Cell> cells{Cell{}};
  for (const SweepAxis& axis : axes) {
    std::vector<Cell> next;
    for (const Cell& cell : cells) {
      for (const std::string& value : axis.values) {
        Cell c = cell;
        c.values.emplace_back(axis.name, value);
        std::string part = axis.name + "=" + value;
        for (char& ch : part) {
          if (ch == ':' || ch == '/' || ch == ' ') ch = '-';
        }
        c.label += (c.label.empty() ? "" : "_") + part;
        next.push_back(std::move(c));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

int cmd_run(const RunOverrides& overrides, const std::optional<std::string>& config_path,
            const std::optional<std::string>& out_exact, const std::optional<std::string>& out_root,
            bool frames, std::ostream& out) {
  SimConfig config = apply_overrides(load_base(config_path), overrides);
  if (frames) config.metrics.export_frames = true;
  const std::filesystem::path dir =
      out_exact ? std::filesystem::path(*out_exact) : fresh_path(output_root(out_root) / run_directory_name(config));
  Simulation sim = build_simulation(config);
  const RunArtifacts artifacts = run(sim);
  write_run_artifacts(dir, artifacts, config);
  print_run_summary(out, artifacts.summary, dir);
  return kExitOk;
}

int cmd_sweep(const RunOverrides& overrides, const std::optional<std::string>& config_path,
              const std::vector<std::string>& axis_texts, const std::optional<std::string>& out_exact,
              const std::optional<std::string>& out_root, std::ostream& out, std::ostream& err) {
  const SimConfig base = apply_overrides(load_base(config_path), overrides);
  std::vector<SweepAxis> axes;
  for (const std::string& text : axis_texts) axes.push_back(parse_axis(text));
  // Reject unknown axes before running anything.
  for (const SweepAxis& axis : axes) {
    for (const std::string& value : axis.values) (void)apply_axis_value(base, axis.name, value);
  }

  const std::filesystem::path dir =
      out_exact ? std::filesystem::path(*out_exact)
                : fresh_path(output_root(out_root) / ("sweep-" + utc_timestamp() + "-" + hex8(config_digest(base))));
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create directory: " + ec.message());

  std::string table = "cell,policy,gamma,density,seed,status,statistic,value\n";
  std::size_t failed = 0;
  for (const Cell& cell : cartesian(axes)) {
    SimConfig config = base;
    for (const auto& [name, value] : cell.values) config = apply_axis_value(config, name, value);
    const std::string prefix = cell.label + ',' + std::string(to_string(config.policy.mode)) + ',' +
                               (config.policy.mode == PolicyMode::kAccuracy ? format_number(config.policy.gamma) : "") +
                               ',' + format_number(config.scenario.target_density) + ',' +
                               std::to_string(config.seed) + ',';
    try {
      Simulation sim = build_simulation(config);
      const RunArtifacts artifacts = run(sim);
      write_run_artifacts(dir / cell.label, artifacts, config);
      const std::string summary = summary_json(artifacts.summary, config);
      for (const auto& [statistic, value] : summary_statistics(summary)) {
        table += prefix + "ok," + statistic + ',' + format_number(value) + '\n';
      }
      const auto mean = [](const BoxStats& b) { return b.values ? format_number(b.values->mean) : std::string("n/a"); };
      out << cell.label << "  cbr " << mean(artifacts.summary.cbr) << "  ote " << mean(artifacts.summary.ote) << '\n';
    } catch (const std::exception& ex) {
      ++failed;
      table += prefix + "failed,error,\n";
      err << cell.label << ": failed: " << ex.what() << '\n';
    }
  }
  write_text_file(dir / "compare.csv", table);
  out << "compare table     " << (dir / "compare.csv").string() << '\n';
  return failed == 0 ? kExitOk : kExitFailedCells;
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b, const std::optional<std::string>& out_file,
                std::ostream& out) {
  const std::string a = read_text_file(std::filesystem::path(dir_a) / "summary.json");
  const std::string b = read_text_file(std::filesystem::path(dir_b) / "summary.json");
  const std::string table = compare_csv(a, b);
  if (out_file) {
    write_text_file(*out_file, table);
  } else {
    out << table;
  }
  return kExitOk;
}

}  // namespace

SimConfig apply_overrides(SimConfig config, const RunOverrides& o) {
  for (const std::string& entry : o.set) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) throw ConfigError(entry, "expected key=value");
    config = with_override(config, trim(entry.substr(0, eq)), trim(entry.substr(eq + 1)));
  }
  if (o.seed) config.seed = *o.seed;
  if (o.duration) config.duration = *o.duration;
  if (o.density) config.scenario.target_density = *o.density;
  if (o.policy) config.policy.mode = parse_policy_mode(*o.policy);
  if (o.gamma) config.policy.gamma = *o.gamma;
  config.validate();
  return config;
}

SweepAxis parse_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(text, "sweep axis must look like name=v1,v2");
  SweepAxis axis;
  axis.name = trim(text.substr(0, eq));
  std::stringstream values(text.substr(eq + 1));
  std::string value;
  while (std::getline(values, value, ',')) {
    value = trim(value);
    if (!value.empty()) axis.values.push_back(value);
  }
  if (axis.values.empty()) throw ConfigError(axis.name, "sweep axis has no values");
  return axis;
}

SimConfig apply_axis_value(SimConfig config, const std::string& axis, const std::string& value) {
  if (axis == "policy") {
    const auto colon = value.find(':');
    config.policy.mode = parse_policy_mode(value.substr(0, colon));
    if (colon != std::string::npos) return with_override(config, "policy.gamma", value.substr(colon + 1));
    return config;
  }
  if (axis == "gamma") return with_override(config, "policy.gamma", value);
  if (axis == "density") return with_override(config, "scenario.target_density", value);
  return with_override(config, axis, value);
}

std::string run_directory_name(const SimConfig& config) {
  return utc_timestamp() + "-" + hex8(config_digest(config));
}

std::filesystem::path output_root(const std::optional<std::string>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("CPSIM_OUTPUT_ROOT"); env != nullptr && *env != '\0') return env;
  return "runs";
}

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"cpsim: collective perception simulator"};
  app.require_subcommand(1);

  RunOverrides run_overrides;
  std::optional<std::string> run_config;
  std::optional<std::string> run_out;
  std::optional<std::string> run_out_dir;
  bool run_frames = false;
  CLI::App* run_cmd = app.add_subcommand("run", "Run one simulation and export its artifacts");
  add_override_options(*run_cmd, run_overrides, run_config);
  run_cmd->add_option("--out", run_out, "Exact artifact directory");
  run_cmd->add_option("--out-dir", run_out_dir, "Output root (default $CPSIM_OUTPUT_ROOT or ./runs)");
  run_cmd->add_flag("--frames", run_frames, "Also write the per-frame trace frames.csv");

  RunOverrides sweep_overrides;
  std::optional<std::string> sweep_config;
  std::optional<std::string> sweep_out;
  std::optional<std::string> sweep_out_dir;
  std::vector<std::string> axes;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Run the Cartesian product of sweep axes");
  add_override_options(*sweep_cmd, sweep_overrides, sweep_config);
  sweep_cmd->add_option("--axis", axes,
                        "name=v1,v2,... with name policy (etsi, accuracy:GAMMA), gamma, density, seed "
                        "or a dotted config key (repeatable)")
      ->required();
  sweep_cmd->add_option("--out", sweep_out, "Exact sweep directory");
  sweep_cmd->add_option("--out-dir", sweep_out_dir, "Output root (default $CPSIM_OUTPUT_ROOT or ./runs)");

  std::string dir_a;
  std::string dir_b;
  std::optional<std::string> compare_out;
  CLI::App* compare_cmd = app.add_subcommand("compare", "Compare the summaries of two run directories");
  compare_cmd->add_option("dir_a", dir_a, "First run directory")->required();
  compare_cmd->add_option("dir_b", dir_b, "Second run directory")->required();
  compare_cmd->add_option("--out", compare_out, "Write compare.csv here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run_overrides, run_config, run_out, run_out_dir, run_frames, out);
    if (sweep_cmd->parsed()) {
      return cmd_sweep(sweep_overrides, sweep_config, axes, sweep_out, sweep_out_dir, out, err);
    }
    if (compare_cmd->parsed()) return cmd_compare(dir_a, dir_b, compare_out, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace cpsim
