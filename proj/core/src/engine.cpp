#include "cpsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>

#include "cpsim/error.hpp"
#include "cpsim/policy.hpp"
#include "cpsim/sensor.hpp"

namespace cpsim {

Simulation::Simulation(SimConfig config)
    : config_(std::move(config)),
      rng_(std::make_unique<RngStreams>(config_.seed)),
      world_(config_.scenario),
      metrics_(config_.metrics) {
  config_.validate();
  clock_.tick = config_.tick;
  total_ticks_ = std::llround(config_.duration / config_.tick);
  sensor_every_ = config_.sensor_every();
  policy_every_ = config_.policy_every();
  cbr_every_ = config_.cbr_every();
  channel_ = std::make_unique<Channel>(config_.radio, rng_->mac_backoff);
  populate(world_, rng_->mobility);
  refresh_stations();
}

void Simulation::refresh_stations() {
  const Region& comms = config_.scenario.comms_region;
  std::map<StationId, Station> next;
  const SimTimeNs tick_ns = to_nanos(config_.tick);
  for (const Vehicle& v : world_.vehicles()) {
    if (!v.is_station || !comms.contains(v.position.x())) continue;
    auto node = stations_.extract(v.id);
    if (!node.empty()) {
      next.insert(std::move(node));
      continue;
    }
    // Spreads MAC hand-offs over the tick; without it every station would
    // contend at the same nanosecond.
    const auto offset = static_cast<SimTimeNs>(rng_->mac_backoff.uniform_int(0, static_cast<std::uint64_t>(tick_ns - 1)));
    next.emplace(v.id, Station(v.id, config_.motion_model, offset));
  }
  stations_ = std::move(next);
}

void Simulation::sense_all(TickReport& report) {
  const double now = clock_.now();
  const double range = config_.sensor.range;
  for (auto& [id, station] : stations_) {
    const Vehicle* ego = world_.find(id);
    const auto neighbors = world_.in_x_window(ego->position.x() - range, ego->position.x() + range);
    const auto detections = sense(*ego, neighbors, rng_->sensor, now, config_.sensor);
    lem_ingest(station.lem, detections);
    for (const Detection& d : detections) fused_ingest(station.fused, d.object_id, to_measurement(d));
    report.detections += detections.size();
  }
}

void Simulation::prune_all() {
  const double now = clock_.now();
  for (auto& [id, station] : stations_) {
    for (const ObjectId gone : station.lem.prune_stale(now)) station.history.forget(gone);
    station.v2x.prune_stale(now);
    station.fused.prune_stale(now);
  }
}

void Simulation::generate_cpms(TickReport& report) {
  const double now = clock_.now();
  const SimTimeNs now_ns = to_nanos(now);
  const PolicyConfig& cfg = config_.policy;
  for (auto& [id, station] : stations_) {
    station.lem.predict_all(now);
    std::vector<ObjectId> selection;
    if (cfg.mode == PolicyMode::kEtsi) {
      selection = etsi_select(station.lem, station.history, now, cfg.etsi);
    } else {
      station.v2x.predict_all(now);
      selection = accuracy_select(station.lem, station.v2x, cfg);
    }
    const Vehicle* ego = world_.find(id);
    auto cpm = assemble_cpm(id, SenderPose{ego->position, ego->heading}, selection, station.lem,
                            station.history, now, cfg);
    if (!cpm) continue;
    auto payload = std::make_shared<const Cpm>(std::move(*cpm));
    if (cfg.self_echo) v2x_ingest(station.v2x, *payload, id, now, /*loopback=*/true);
    ++report.cpms_sent;
    report.objects_reported += payload->objects.size();
    channel_->try_transmit(id, std::move(payload), now_ns + station.access_offset);
  }
}

void Simulation::resolve_channel(TickReport& report) {
  const double now = clock_.now();
  std::vector<StationPosition> positions;
  positions.reserve(stations_.size());
  for (const auto& [id, station] : stations_) positions.push_back({id, world_.find(id)->position});

  const SimTimeNs window_end = to_nanos(now) + to_nanos(config_.tick);
  const auto outcomes = channel_->advance(window_end, positions);
  // Deliveries grouped by receiver, frame order kept within each group, so a
  // station's models stay in cache while it works through its inbox.
  std::vector<std::pair<StationId, std::size_t>> deliveries;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const FrameOutcome& outcome = outcomes[i];
    ++report.frames_resolved;
    report.cpms_received += outcome.received;
    report.cpms_collided += outcome.collided;
    if (config_.metrics.export_frames) {
      frames_.push_back({outcome.frame.id, outcome.frame.sender_id, outcome.frame.tx_start, outcome.frame.tx_end,
                         outcome.frame.payload->objects.size(), outcome.intended, outcome.received,
                         outcome.collided, outcome.out_of_range});
    }
    for (const StationId receiver : outcome.receivers) deliveries.emplace_back(receiver, i);
  }
  std::stable_sort(deliveries.begin(), deliveries.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  // Report extrapolation depends only on the frame and the tick, so it is
  // done once per frame rather than once per receiver.
  std::vector<std::optional<ReportMeasurements>> reports;
  reports.reserve(outcomes.size());
  for (const FrameOutcome& outcome : outcomes) {
    reports.push_back(outcome.receivers.empty() ? std::nullopt
                                                : cpm_measurements(*outcome.frame.payload, now, config_.motion_model));
  }

  Station* station = nullptr;
  for (const auto& [receiver, index] : deliveries) {
    if (station == nullptr || station->id != receiver) station = &stations_.at(receiver);
    if (outcomes[index].frame.sender_id == receiver) continue;
    if (!reports[index]) {
      ++report.malformed_cpms;
      continue;
    }
    for (const auto& [object_id, m] : *reports[index]) {
      if (object_id == receiver) continue;
      station->v2x.ingest(object_id, m);
      fused_ingest(station->fused, object_id, m);
    }
  }
}

TickReport Simulation::step() {
  if (finished()) throw DomainError("step past the configured duration");
  ++clock_.tick_index;
  const double now = clock_.now();

  TickReport report;
  report.tick_index = clock_.tick_index;
  report.now = now;

  advance(world_, config_.tick);
  spawn(world_, rng_->mobility, config_.tick);
  refresh_stations();
  report.vehicles = world_.vehicles().size();
  report.active_stations = stations_.size();

  if (clock_.tick_index % sensor_every_ == 0) sense_all(report);
  prune_all();
  if (clock_.tick_index % policy_every_ == 0) generate_cpms(report);
  resolve_channel(report);

  std::vector<const Station*> active;
  active.reserve(stations_.size());
  for (const auto& [id, station] : stations_) active.push_back(&station);
  const std::size_t cbr_before = metrics_.cbr_count();
  const bool cbr_due = clock_.tick_index % cbr_every_ == 0;
  report.ote_samples = record_tick(metrics_, world_, active, *channel_, now, cbr_due,
                                   to_nanos(now) + to_nanos(config_.tick));
  report.cbr_samples = metrics_.cbr_count() - cbr_before;

  detections_ += report.detections;
  cpms_generated_ += report.cpms_sent;
  objects_reported_ += report.objects_reported;
  malformed_cpms_ += report.malformed_cpms;
  return report;
}

RunSummary Simulation::summary() const {
  RunSummary s = summarize(metrics_);
  s.ticks = static_cast<std::size_t>(clock_.tick_index);
  s.simulated_time = now();
  s.channel = channel_->counters();
  s.detections = detections_;
  s.cpms_generated = cpms_generated_;
  s.objects_reported = objects_reported_;
  s.malformed_cpms = malformed_cpms_;
  return s;
}

Simulation build_simulation(const SimConfig& config) {
  config.validate();
  return Simulation(config);
}

RunArtifacts run(Simulation& sim) {
  while (!sim.finished()) sim.step();
  RunArtifacts artifacts;
  artifacts.summary = sim.summary();
  artifacts.ote = sim.metrics().ote_samples();
  artifacts.cbr = sim.metrics().cbr_samples();
  artifacts.frames = sim.frames();
  return artifacts;
}

}  // namespace cpsim
