#include "cpsim/env_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "cpsim/error.hpp"

namespace cpsim {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLem:
      return "lem";
    case ModelKind::kV2x:
      return "v2x";
    case ModelKind::kFused:
      return "fused";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "lem") return ModelKind::kLem;
  if (lower == "v2x") return ModelKind::kV2x;
  if (lower == "fused") return ModelKind::kFused;
  throw ConfigError("metrics.model_kind", "expected one of lem, v2x, fused; got '" + lower + "'");
}

const Track* EnvModel::find(ObjectId id) const {
  const auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) return nullptr;
  return &tracks_[static_cast<std::size_t>(it - ids_.begin())].second;
}

void EnvModel::ingest(ObjectId id, const Measurement& m) {
  const auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  const auto index = it - ids_.begin();
  if (it == ids_.end() || *it != id) {
    ids_.insert(it, id);
    tracks_.emplace(tracks_.begin() + index, id, make_track(id, m, params_));
    return;
  }
  Track& track = tracks_[static_cast<std::size_t>(index)].second;
  kf_predict_in_place(track, m.timestamp, params_);
  kf_update_in_place(track, m);
}

void EnvModel::predict_all(double now) {
  for (auto& [id, track] : tracks_) kf_predict_in_place(track, now, params_);
}

std::vector<ObjectId> EnvModel::prune_stale(double now) {
  std::vector<ObjectId> removed;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    if (now - tracks_[i].second.last_update > params_.stale_after) {
      removed.push_back(tracks_[i].first);
      continue;
    }
    if (kept != i) tracks_[kept] = std::move(tracks_[i]);
    ++kept;
  }
  tracks_.resize(kept);
  ids_.resize(kept);
  for (std::size_t i = 0; i < kept; ++i) ids_[i] = tracks_[i].first;
  return removed;
}

void lem_ingest(EnvModel& lem, std::span<const Detection> detections) {
  for (const Detection& d : detections) lem.ingest(d.object_id, to_measurement(d));
}

bool is_well_formed(const ReportedObject& object) {
  if (!object.state.allFinite() || !object.covariance.allFinite()) return false;
  const Mat2 block = object.covariance.topLeftCorner<2, 2>();
  if (std::abs(block(0, 1) - block(1, 0)) > 1e-9 * (1.0 + block.cwiseAbs().maxCoeff())) return false;
  return Eigen::LLT<Mat2>(block).info() == Eigen::Success;
}

std::optional<ReportMeasurements> cpm_measurements(const Cpm& cpm, double now, const MotionModelParams& model) {
  if (!std::all_of(cpm.objects.begin(), cpm.objects.end(), is_well_formed)) return std::nullopt;
  ReportMeasurements out;
  out.reserve(cpm.objects.size());
  for (const ReportedObject& object : cpm.objects) {
    Track report;
    report.x = object.state;
    report.P = object.covariance;
    report.last_predict = object.measurement_time;
    if (object.measurement_time < now) kf_predict_in_place(report, now, model);

    Measurement m;
    m.z = report.x.head<2>();
    m.R = report.P.topLeftCorner<2, 2>();
    m.R = 0.5 * (m.R + m.R.transpose()).eval();
    m.timestamp = std::max(now, object.measurement_time);
    m.source = MeasurementSource::kCpm;
    m.sender = cpm.sender_id;
    out.emplace_back(object.object_id, m);
  }
  return out;
}

CpmIngestResult v2x_ingest(EnvModel& v2x, const Cpm& cpm, StationId receiver, double now,
                           bool loopback) {
  CpmIngestResult result;
  if (cpm.sender_id == receiver && !loopback) return result;
  auto reports = cpm_measurements(cpm, now, v2x.params());
  if (!reports) {
    result.dropped = true;
    return result;
  }
  for (const auto& [object_id, m] : *reports) {
    if (object_id == receiver) continue;
    v2x.ingest(object_id, m);
    result.accepted.emplace_back(object_id, m);
  }
  return result;
}

void fused_ingest(EnvModel& fused, ObjectId id, const Measurement& m) { fused.ingest(id, m); }

}  // namespace cpsim
