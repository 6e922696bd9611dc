#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cpsim/channel.hpp"
#include "cpsim/env_model.hpp"
#include "cpsim/types.hpp"

namespace cpsim {

class World;
struct Station;

struct MetricsConfig {
  double warmup = 10.0;            // s, nothing is logged before this time
  double max_distance = 300.0;     // m, OTE is logged up to this ego-object distance
  double bin_width = 25.0;         // m
  double far_threshold = 85.0;     // m, split for the "beyond sensor range" statistic
  ModelKind model_kind = ModelKind::kFused;
  bool keep_raw = true;            // keep per-sample rows for CSV export
  bool export_frames = false;      // write the per-frame trace

  void validate() const;
};

struct OteSample {
  double time = 0.0;
  StationId ego_id = 0;
  ObjectId object_id = 0;
  double error = 0.0;     // m
  double distance = 0.0;  // m, ego to object ground truth
  ModelKind model_kind = ModelKind::kFused;
};

struct CbrSample {
  double time = 0.0;
  StationId station_id = 0;
  double cbr = 0.0;
};

// Rounds to 6 significant digits, the precision of every exported number.
// Samples are quantized when recorded so summaries and CSVs agree exactly.
double quantize(double value);

// Linear interpolation between closest ranks: h = (n - 1) p on sorted data.
double quantile_sorted(std::span<const double> sorted, double p);

struct BoxValues {
  double mean = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double whisker_low = 0.0;   // max(Q1 - 1.5 IQR, min)
  double whisker_high = 0.0;  // min(Q3 + 1.5 IQR, max)
};

struct BoxStats {
  std::size_t count = 0;
  std::optional<BoxValues> values;  // absent when count == 0
};

BoxStats box_stats(std::vector<double> samples);

struct DistanceBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  std::optional<double> mean;
};

struct TrafficStats {
  std::size_t samples = 0;
  double mean_density = 0.0;  // vehicles per km of road
  double mean_speed = 0.0;    // m/s
};

struct RunSummary {
  std::size_t ticks = 0;
  double simulated_time = 0.0;
  BoxStats cbr;
  BoxStats ote;
  BoxStats ote_far;  // ego-object distance > far_threshold
  std::vector<DistanceBin> ote_by_distance;
  ChannelCounters channel;
  std::uint64_t detections = 0;
  std::uint64_t cpms_generated = 0;
  std::uint64_t objects_reported = 0;
  std::uint64_t malformed_cpms = 0;
  TrafficStats traffic;
};

// Append-only sample store owned by the engine.
class MetricsCollector {
 public:
  explicit MetricsCollector(MetricsConfig config);

  const MetricsConfig& config() const { return config_; }

  void add_cbr(const CbrSample& sample);
  void add_ote(const OteSample& sample);
  void add_traffic(double density_per_km, double mean_speed);

  std::size_t cbr_count() const { return cbr_values_.size(); }
  std::size_t ote_count() const { return ote_errors_.size(); }

  const std::vector<double>& cbr_values() const { return cbr_values_; }
  const std::vector<double>& ote_errors() const { return ote_errors_; }
  const std::vector<double>& ote_far_errors() const { return ote_far_errors_; }
  // Raw rows; empty unless keep_raw.
  const std::vector<CbrSample>& cbr_samples() const { return cbr_samples_; }
  const std::vector<OteSample>& ote_samples() const { return ote_samples_; }
  const std::vector<double>& bin_sums() const { return bin_sums_; }
  const std::vector<std::size_t>& bin_counts() const { return bin_counts_; }
  const TrafficStats& traffic() const { return traffic_; }

 private:
  MetricsConfig config_;
  std::vector<double> cbr_values_;
  std::vector<double> ote_errors_;
  std::vector<double> ote_far_errors_;
  std::vector<double> bin_sums_;
  std::vector<std::size_t> bin_counts_;
  std::vector<CbrSample> cbr_samples_;
  std::vector<OteSample> ote_samples_;
  TrafficStats traffic_;
  double density_sum_ = 0.0;
  double speed_sum_ = 0.0;
};

// Samples for one tick, after channel resolution. Only stations inside the
// logging region contribute, and only once `now` has passed the warm-up.
// `cbr_due` marks ticks that close a CBR window ending at `window_end`.
// Returns the number of OTE samples taken.
std::size_t record_tick(MetricsCollector& collector, const World& world,
                        std::span<const Station* const> stations, const Channel& channel,
                        double now, bool cbr_due, SimTimeNs window_end);

RunSummary summarize(const MetricsCollector& collector);

}  // namespace cpsim
