#include "cpsim/channel.hpp"

#include <algorithm>
#include <cmath>

#include "cpsim/error.hpp"

namespace cpsim {

void RadioParams::validate() const {
  if (!(bit_rate > 0.0)) throw ConfigError("radio.bit_rate", "must be positive");
  if (!(signal_threshold_dbm < noise_threshold_dbm)) {
    throw ConfigError("radio.signal_threshold_dbm", "must be below noise_threshold_dbm");
  }
  if (!(carrier_sense_threshold_dbm <= signal_threshold_dbm)) {
    throw ConfigError("radio.carrier_sense_threshold_dbm", "must not exceed signal_threshold_dbm");
  }
  if (!(carrier_freq > 0.0)) throw ConfigError("radio.carrier_freq", "must be positive");
  if (!(path_loss_exponent > 0.0)) throw ConfigError("radio.path_loss_exponent", "must be positive");
  if (!(preamble_overhead >= 0.0)) throw ConfigError("radio.preamble_overhead", "must be non-negative");
  if (!(slot > 0.0)) throw ConfigError("radio.slot", "must be positive");
  if (cw < 0) throw ConfigError("radio.cw", "must be non-negative");
  if (!(cbr_window > 0.0)) throw ConfigError("radio.cbr_window", "must be positive");
}

double airtime(std::size_t size_bytes, const RadioParams& params) {
  return params.preamble_overhead + static_cast<double>(size_bytes) * 8.0 / params.bit_rate;
}

ReceptionRange reception_range(const RadioParams& params) {
  const auto solve = [&](double threshold_dbm) {
    const double budget_db = params.tx_power_dbm - params.reference_loss_db - threshold_dbm;
    return std::pow(10.0, budget_db / (10.0 * params.path_loss_exponent));
  };
  return {solve(params.signal_threshold_dbm), solve(params.carrier_sense_threshold_dbm)};
}

Channel::Channel(RadioParams params, RngStream& backoff_rng)
    : params_(params),
      ranges_(reception_range(params_)),
      rng_(backoff_rng),
      slot_ns_(to_nanos(params_.slot)) {}

const Frame* Channel::waiting(StationId station) const {
  const auto it = waiting_.find(station);
  return it == waiting_.end() ? nullptr : &it->second;
}

void Channel::try_transmit(StationId sender, std::shared_ptr<const Cpm> payload, SimTimeNs arrival) {
  ++counters_.submitted;
  const std::size_t size = payload->size_bytes;
  if (auto it = waiting_.find(sender); it != waiting_.end()) {
    // Freshest wins; the pending attempt event stays scheduled.
    it->second.payload = std::move(payload);
    it->second.size_bytes = size;
    ++counters_.replaced;
    return;
  }
  Frame frame;
  frame.sender_id = sender;
  frame.payload = std::move(payload);
  frame.size_bytes = size;
  frame.arrival = arrival;
  waiting_.emplace(sender, std::move(frame));
  events_.push({arrival, next_seq_++, sender, EventKind::kArrival});
}

bool Channel::in_sense_range(const Vec2& a, const Vec2& b) const {
  return (a - b).norm() <= ranges_.sense;
}

std::optional<SimTimeNs> Channel::busy_until(StationId station, const Vec2& position, SimTimeNs t) const {
  std::optional<SimTimeNs> until;
  for (const Frame& f : on_air_) {
    if (!(f.tx_start < t && t < f.tx_end)) continue;
    if (f.sender_id != station && !in_sense_range(f.sender_position, position)) continue;
    until = until ? std::max(*until, f.tx_end) : f.tx_end;
  }
  return until;
}

void Channel::start_transmission(StationId station, const Vec2& position, SimTimeNs t) {
  auto node = waiting_.extract(station);
  Frame frame = std::move(node.mapped());
  frame.id = next_frame_id_++;
  frame.sender_position = position;
  frame.tx_start = t;
  frame.tx_end = t + to_nanos(airtime(frame.size_bytes, params_));
  on_air_.push_back(frame);
  recent_.push_back(std::move(frame));
  ++counters_.transmitted;
}

void Channel::schedule_backoff(StationId station, SimTimeNs idle_from) {
  const auto slots = static_cast<SimTimeNs>(rng_.uniform_int(0, static_cast<std::uint64_t>(params_.cw)));
  events_.push({idle_from + slots * slot_ns_, next_seq_++, station, EventKind::kAttempt});
}

std::vector<FrameOutcome> Channel::advance(SimTimeNs window_end, const std::vector<StationPosition>& stations) {
  const auto position_of = [&](StationId id) -> const Vec2* {
    const auto it = std::lower_bound(stations.begin(), stations.end(), id,
                                     [](const StationPosition& s, StationId key) { return s.id < key; });
    return (it != stations.end() && it->id == id) ? &it->position : nullptr;
  };

  std::vector<Event> batch;
  while (!events_.empty() && events_.top().time < window_end) {
    const SimTimeNs t = events_.top().time;
    batch.clear();
    while (!events_.empty() && events_.top().time == t) {
      batch.push_back(events_.top());
      events_.pop();
    }
    for (const Event& e : batch) {
      if (!waiting_.contains(e.station)) continue;
      const Vec2* position = position_of(e.station);
      if (position == nullptr) {
        // Sender left the communication area before it got the medium.
        waiting_.erase(e.station);
        continue;
      }
      const auto busy = busy_until(e.station, *position, t);
      // Simultaneous arrivals within carrier-sense range of each other contend.
      const bool contended =
          e.kind == EventKind::kArrival &&
          std::any_of(batch.begin(), batch.end(), [&](const Event& other) {
            if (other.station == e.station || other.kind != EventKind::kArrival) return false;
            const Vec2* other_position = position_of(other.station);
            return other_position != nullptr && in_sense_range(*other_position, *position);
          });
      if (!busy && !contended) {
        start_transmission(e.station, *position, t);
      } else {
        schedule_backoff(e.station, busy ? *busy : t);
      }
    }
  }

  std::vector<Frame> finished;
  std::erase_if(on_air_, [&](const Frame& f) {
    if (f.tx_end > window_end) return false;
    finished.push_back(f);
    return true;
  });
  std::sort(finished.begin(), finished.end(), [](const Frame& a, const Frame& b) {
    return a.tx_end != b.tx_end ? a.tx_end < b.tx_end : a.id < b.id;
  });

  std::vector<FrameOutcome> outcomes;
  outcomes.reserve(finished.size());
  for (const Frame& f : finished) {
    FrameOutcome outcome = resolve(f, stations);
    ++counters_.delivered_frames;
    counters_.receptions += outcome.received;
    counters_.collided += outcome.collided;
    counters_.out_of_range += outcome.out_of_range;
    if (outcome.collided > 0) ++counters_.frames_with_collision;
    outcomes.push_back(std::move(outcome));
  }

  // Keep enough history for CBR windows and overlap checks of unresolved frames.
  const SimTimeNs horizon = window_end - 2 * to_nanos(params_.cbr_window) - kNanosPerSecond / 10;
  while (!recent_.empty() && recent_.front().tx_end < horizon) recent_.pop_front();
  return outcomes;
}

FrameOutcome Channel::resolve(const Frame& frame, const std::vector<StationPosition>& stations) const {
  std::vector<const Frame*> overlapping;
  for (const Frame& g : recent_) {
    if (g.id == frame.id) continue;
    if (g.tx_start < frame.tx_end && g.tx_end > frame.tx_start) overlapping.push_back(&g);
  }

  FrameOutcome outcome;
  outcome.frame = frame;
  for (const StationPosition& r : stations) {
    if (r.id == frame.sender_id) continue;
    ++outcome.intended;
    if ((r.position - frame.sender_position).norm() > ranges_.decode) {
      ++outcome.out_of_range;
      continue;
    }
    const bool interfered = std::any_of(overlapping.begin(), overlapping.end(), [&](const Frame* g) {
      return g->sender_id == r.id || in_sense_range(g->sender_position, r.position);
    });
    if (interfered) {
      ++outcome.collided;
    } else {
      ++outcome.received;
      outcome.receivers.push_back(r.id);
    }
  }
  return outcome;
}

double Channel::cbr(StationId station, const Vec2& position, SimTimeNs window_end) const {
  const SimTimeNs window = to_nanos(params_.cbr_window);
  const SimTimeNs window_start = window_end - window;
  std::vector<std::pair<SimTimeNs, SimTimeNs>> intervals;
  for (const Frame& f : recent_) {
    if (f.sender_id != station && !in_sense_range(f.sender_position, position)) continue;
    const SimTimeNs lo = std::max(f.tx_start, window_start);
    const SimTimeNs hi = std::min(f.tx_end, window_end);
    if (hi > lo) intervals.emplace_back(lo, hi);
  }
  std::sort(intervals.begin(), intervals.end());
  SimTimeNs busy = 0;
  SimTimeNs run_lo = 0;
  SimTimeNs run_hi = 0;
  bool open = false;
  for (const auto& [lo, hi] : intervals) {
    if (open && lo <= run_hi) {
      run_hi = std::max(run_hi, hi);
      continue;
    }
    if (open) busy += run_hi - run_lo;
    run_lo = lo;
    run_hi = hi;
    open = true;
  }
  if (open) busy += run_hi - run_lo;
  return std::clamp(static_cast<double>(busy) / static_cast<double>(window), 0.0, 1.0);
}

}  // namespace cpsim
