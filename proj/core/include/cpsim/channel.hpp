#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <vector>

#include "cpsim/cpm.hpp"
#include "cpsim/rng.hpp"
#include "cpsim/types.hpp"

namespace cpsim {

struct RadioParams {
  double bit_rate = 6e6;                 // bit/s
  double tx_power_dbm = 23.0;            // 200 mW
  double signal_threshold_dbm = -85.0;   // decode threshold
  double noise_threshold_dbm = -65.0;    // recorded, not used by this PHY
  double carrier_sense_threshold_dbm = -95.0;
  double carrier_freq = 5.9e9;           // Hz
  double path_loss_exponent = 2.2;
  double reference_loss_db = 47.86;      // at 1 m
  double preamble_overhead = 40e-6;      // s per frame
  double slot = 13e-6;                   // s
  int cw = 15;                           // backoff drawn from [0, cw] slots
  double cbr_window = 0.1;               // s

  void validate() const;
};

// Preamble plus payload serialization time.
double airtime(std::size_t size_bytes, const RadioParams& params);

struct ReceptionRange {
  double decode = 0.0;  // m
  double sense = 0.0;   // m
};

// Log-distance path loss solved for the decode and carrier-sense thresholds.
ReceptionRange reception_range(const RadioParams& params);

struct Frame {
  std::uint64_t id = 0;
  StationId sender_id = 0;
  Vec2 sender_position = Vec2::Zero();
  std::shared_ptr<const Cpm> payload;
  std::size_t size_bytes = 0;
  SimTimeNs arrival = 0;  // handed to the MAC
  SimTimeNs tx_start = 0;
  SimTimeNs tx_end = 0;
};

struct Reception {
  StationId receiver = 0;
  std::shared_ptr<const Cpm> payload;
};

// Outcome of one frame over all intended receivers (every active station
// except the sender). received + collided + out_of_range == intended.
struct FrameOutcome {
  Frame frame;
  std::size_t intended = 0;
  std::size_t received = 0;
  std::size_t collided = 0;
  std::size_t out_of_range = 0;
  std::vector<StationId> receivers;  // successful, ascending
};

struct ChannelCounters {
  std::uint64_t submitted = 0;
  std::uint64_t replaced = 0;
  std::uint64_t transmitted = 0;
  std::uint64_t delivered_frames = 0;
  std::uint64_t receptions = 0;
  std::uint64_t collided = 0;
  std::uint64_t out_of_range = 0;
  std::uint64_t frames_with_collision = 0;
};

struct StationPosition {
  StationId id = 0;
  Vec2 position = Vec2::Zero();
};

// Broadcast medium with CSMA and collision-based loss.
//
// Timeline in integer nanoseconds. A frame handed to the MAC is sent at once
// when the medium is idle at the sender and no other frame arrives at the same
// instant; otherwise it waits for the medium to go idle plus a uniform backoff
// of [0, cw] slots, re-checking (with a fresh backoff) whenever the medium is
// busy at expiry. A station holds at most one waiting frame; a newer one
// replaces it. Stations cannot sense transmissions that start at the very
// instant they start their own, so equal backoffs collide.
//
// A receiver decodes a frame iff it is within decode range of the sender and
// no other frame from a sender within its sense range (or from itself)
// overlaps the frame in time.
class Channel {
 public:
  Channel(RadioParams params, RngStream& backoff_rng);

  const RadioParams& params() const { return params_; }
  const ReceptionRange& ranges() const { return ranges_; }
  const ChannelCounters& counters() const { return counters_; }

  // Hands a CPM to the sender's MAC at `arrival`.
  void try_transmit(StationId sender, std::shared_ptr<const Cpm> payload, SimTimeNs arrival);

  // Runs MAC events strictly before `window_end` using the given station
  // positions (piecewise constant over the window), then resolves every frame
  // that ended at or before `window_end`. Outcomes are ordered by (tx_end, id).
  std::vector<FrameOutcome> advance(SimTimeNs window_end, const std::vector<StationPosition>& stations);

  // Busy fraction of [window_end - cbr_window, window_end] at a station:
  // union of airtime from senders within sense range, itself included.
  double cbr(StationId station, const Vec2& position, SimTimeNs window_end) const;

  // Frames that started transmitting, in start order; bounded history.
  const std::deque<Frame>& recent_frames() const { return recent_; }

  // Frame still waiting in a station's queue slot, if any.
  const Frame* waiting(StationId station) const;

  // All frames ever placed on air and not yet resolved.
  std::size_t on_air_count() const { return on_air_.size(); }

 private:
  enum class EventKind { kArrival, kAttempt };
  struct Event {
    SimTimeNs time = 0;
    std::uint64_t seq = 0;
    StationId station = 0;
    EventKind kind = EventKind::kArrival;
    bool operator>(const Event& other) const {
      return time != other.time ? time > other.time : seq > other.seq;
    }
  };

  bool in_sense_range(const Vec2& a, const Vec2& b) const;
  // Latest end among frames audible at `position` and on air at `t`
  // (tx_start < t < tx_end); nullopt when idle.
  std::optional<SimTimeNs> busy_until(StationId station, const Vec2& position, SimTimeNs t) const;
  void start_transmission(StationId station, const Vec2& position, SimTimeNs t);
  void schedule_backoff(StationId station, SimTimeNs idle_from);
  FrameOutcome resolve(const Frame& frame, const std::vector<StationPosition>& stations) const;

  RadioParams params_;
  ReceptionRange ranges_;
  RngStream& rng_;
  SimTimeNs slot_ns_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_frame_id_ = 1;
  std::map<StationId, Frame> waiting_;
  std::vector<Frame> on_air_;   // started, not yet resolved
  std::deque<Frame> recent_;    // started, kept for overlap and CBR queries
  ChannelCounters counters_;
};

}  // namespace cpsim
