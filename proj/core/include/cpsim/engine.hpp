#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "cpsim/channel.hpp"
#include "cpsim/config.hpp"
#include "cpsim/metrics.hpp"
#include "cpsim/mobility.hpp"
#include "cpsim/rng.hpp"
#include "cpsim/station.hpp"

namespace cpsim {

struct Clock {
  double tick = 0.1;
  std::int64_t tick_index = 0;
  double now() const { return static_cast<double>(tick_index) * tick; }
};

// Per-frame trace row.
struct FrameRecord {
  std::uint64_t frame_id = 0;
  StationId sender_id = 0;
  SimTimeNs tx_start = 0;
  SimTimeNs tx_end = 0;
  std::size_t objects = 0;
  std::size_t intended = 0;
  std::size_t received = 0;
  std::size_t collided = 0;
  std::size_t out_of_range = 0;
};

struct TickReport {
  std::int64_t tick_index = 0;
  double now = 0.0;
  std::size_t vehicles = 0;
  std::size_t active_stations = 0;
  std::size_t detections = 0;
  std::size_t cpms_sent = 0;       // CPMs generated and handed to the MAC
  std::size_t objects_reported = 0;
  std::size_t frames_resolved = 0;
  std::size_t cpms_received = 0;   // successful (frame, receiver) pairs
  std::size_t cpms_collided = 0;   // (frame, receiver) pairs lost to overlap
  std::size_t malformed_cpms = 0;
  std::size_t ote_samples = 0;
  std::size_t cbr_samples = 0;

  bool operator==(const TickReport&) const = default;
};

struct RunArtifacts {
  RunSummary summary;
  std::vector<OteSample> ote;      // empty unless metrics.keep_raw
  std::vector<CbrSample> cbr;      // empty unless metrics.keep_raw
  std::vector<FrameRecord> frames; // empty unless metrics.export_frames
};

// One simulation run. Each step advances the clock by one tick and runs, in
// order: mobility (advance, then entry arrivals); station bookkeeping;
// sensing with LEM and fused ingest; stale-track pruning; CPM generation;
// channel resolution up to the end of the tick with V2X and fused ingest at
// the receivers; metric sampling.
//
// Stations are the V2X-equipped vehicles inside the communication region. A
// station is created with empty models when its vehicle enters and destroyed
// when it leaves.
class Simulation {
 public:
  explicit Simulation(SimConfig config);

  Simulation(Simulation&&) noexcept = default;
  Simulation& operator=(Simulation&&) noexcept = default;

  const SimConfig& config() const { return config_; }
  const Clock& clock() const { return clock_; }
  double now() const { return clock_.now(); }
  std::int64_t total_ticks() const { return total_ticks_; }
  bool finished() const { return clock_.tick_index >= total_ticks_; }

  const World& world() const { return world_; }
  const Channel& channel() const { return *channel_; }
  const MetricsCollector& metrics() const { return metrics_; }
  const std::map<StationId, Station>& stations() const { return stations_; }
  const std::vector<FrameRecord>& frames() const { return frames_; }

  TickReport step();

  // Summary of everything recorded so far.
  RunSummary summary() const;

 private:
  void refresh_stations();
  void sense_all(TickReport& report);
  void prune_all();
  void generate_cpms(TickReport& report);
  void resolve_channel(TickReport& report);

  SimConfig config_;
  Clock clock_;
  std::int64_t total_ticks_ = 0;
  long sensor_every_ = 1;
  long policy_every_ = 1;
  long cbr_every_ = 1;
  // Heap-held so the channel's reference to its stream survives moves.
  std::unique_ptr<RngStreams> rng_;
  World world_;
  std::unique_ptr<Channel> channel_;
  std::map<StationId, Station> stations_;
  MetricsCollector metrics_;
  std::vector<FrameRecord> frames_;
  std::uint64_t detections_ = 0;
  std::uint64_t cpms_generated_ = 0;
  std::uint64_t objects_reported_ = 0;
  std::uint64_t malformed_cpms_ = 0;
};

// Validates the configuration and returns a populated simulation at t = 0.
Simulation build_simulation(const SimConfig& config);

// Steps until the configured duration.
RunArtifacts run(Simulation& sim);

}  // namespace cpsim
