#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cpsim/config.hpp"
#include "cpsim/engine.hpp"
#include "cpsim/metrics.hpp"
#include "cpsim/mobility.hpp"

namespace cpsim {

// Every number is written with at most 6 significant digits so re-exports are
// byte-identical.
std::string format_number(double value);

// summary.json: run statistics (absent statistics are null) followed by the
// effective configuration under "config".
std::string summary_json(const RunSummary& summary, const SimConfig& config);

// CSV bodies with their fixed headers.
std::string ote_csv(std::span<const OteSample> samples);    // time,ego_id,object_id,error_m,distance_m
std::string cbr_csv(std::span<const CbrSample> samples);    // time,station_id,cbr
std::string frames_csv(std::span<const FrameRecord> frames);

// One line per vehicle (id, lane, position, speed); used by determinism checks.
std::string serialize_world(const World& world);

// Writes summary.json, config.json, ote.csv, cbr.csv and, when frames were
// traced, frames.csv into `dir` (created if needed). Throws IoError.
void write_run_artifacts(const std::filesystem::path& dir, const RunArtifacts& artifacts,
                         const SimConfig& config);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

// Flat (statistic, value) view of a summary.json, in document order, e.g.
// ("cbr.mean", 0.12), ("ote_by_distance.100-125.mean", 1.4). Null
// statistics are skipped. Throws IoError on unreadable or malformed input.
std::vector<std::pair<std::string, double>> summary_statistics(std::string_view summary_text);

// compare.csv for two summaries: statistic,a,b,relative_change where
// relative_change = (a - b) / b (empty when b == 0 or one side is missing).
std::string compare_csv(std::string_view summary_a, std::string_view summary_b);

}  // namespace cpsim
