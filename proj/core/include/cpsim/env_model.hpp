#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <span>
#include <string_view>
#include <vector>

#include "cpsim/cpm.hpp"
#include "cpsim/kalman.hpp"
#include "cpsim/sensor.hpp"

namespace cpsim {

enum class ModelKind { kLem, kV2x, kFused };

std::string_view to_string(ModelKind kind);
// Accepts "lem", "v2x", "fused" (case-insensitive). Throws ConfigError.
ModelKind parse_model_kind(std::string_view text);

// Track set of one station. Each model owns its tracks and a private copy of
// the motion parameters; models never share storage.
class EnvModel {
 public:
  EnvModel(ModelKind kind, MotionModelParams params) : kind_(kind), params_(params) {}

  ModelKind kind() const { return kind_; }
  const MotionModelParams& params() const { return params_; }
  using TrackList = std::vector<std::pair<ObjectId, Track>>;

  // Sorted by object id.
  const TrackList& tracks() const { return tracks_; }
  std::size_t size() const { return tracks_.size(); }
  bool empty() const { return tracks_.empty(); }

  const Track* find(ObjectId id) const;

  // Creates the track on first sight, otherwise predicts to the measurement
  // time and updates. The measurement must not be older than the track's
  // last prediction.
  void ingest(ObjectId id, const Measurement& m);

  // Predicts every track forward to `now`.
  void predict_all(double now);

  // Removes tracks with now - last_update > stale_after; returns their ids.
  std::vector<ObjectId> prune_stale(double now);

  void clear() {
    ids_.clear();
    tracks_.clear();
  }

 private:
  ModelKind kind_;
  MotionModelParams params_;
  // Flat storage: ids_ mirrors the keys of tracks_ so lookups scan a few
  // cache lines instead of chasing tree nodes.
  std::vector<ObjectId> ids_;
  TrackList tracks_;
};

// Feeds local detections into a LEM. Association is by object id.
void lem_ingest(EnvModel& lem, std::span<const Detection> detections);

inline Measurement to_measurement(const Detection& d) {
  return {d.measured_position, d.noise_cov, d.timestamp, MeasurementSource::kLocalSensor, 0};
}

struct CpmIngestResult {
  bool dropped = false;  // malformed message, nothing ingested
  // Accepted per-object measurements, in message order, for the fused model.
  std::vector<std::pair<ObjectId, Measurement>> accepted;
};

// Position block of a reported covariance is finite, symmetric and positive
// definite.
bool is_well_formed(const ReportedObject& object);

// Ingests a received CPM into a V2X model. Each report becomes a position
// measurement with R taken from the position block of its covariance; reports
// older than `now` are first propagated to `now` with the receiver's motion
// model. Reports about `receiver` itself are skipped. A CPM sent by
// `receiver` is ignored unless `loopback` is set (self echo).
using ReportMeasurements = std::vector<std::pair<ObjectId, Measurement>>;

// Every report of `cpm` as a position measurement at `now`, older reports
// extrapolated with `model`. Empty optional when the message is malformed.
std::optional<ReportMeasurements> cpm_measurements(const Cpm& cpm, double now, const MotionModelParams& model);

CpmIngestResult v2x_ingest(EnvModel& v2x, const Cpm& cpm, StationId receiver, double now,
                           bool loopback = false);

void fused_ingest(EnvModel& fused, ObjectId id, const Measurement& m);

}  // namespace cpsim
