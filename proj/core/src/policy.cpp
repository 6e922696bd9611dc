#include "cpsim/policy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cpsim/error.hpp"
#include "cpsim/kl_divergence.hpp"

namespace cpsim {

std::string_view to_string(PolicyMode mode) {
  return mode == PolicyMode::kEtsi ? "etsi" : "accuracy";
}

PolicyMode parse_policy_mode(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "etsi") return PolicyMode::kEtsi;
  if (lower == "accuracy") return PolicyMode::kAccuracy;
  throw ConfigError("policy.mode", "expected 'etsi' or 'accuracy', got '" + lower + "'");
}

void PolicyConfig::validate() const {
  if (!(theta > 0.0)) throw ConfigError("policy.theta", "must be positive");
  if (!(gamma >= 0.0)) throw ConfigError("policy.gamma", "must be non-negative");
  if (!(check_period > 0.0)) throw ConfigError("policy.check_period", "must be positive");
  if (!(etsi.position >= 0.0)) throw ConfigError("policy.etsi.position", "must be non-negative");
  if (!(etsi.speed >= 0.0)) throw ConfigError("policy.etsi.speed", "must be non-negative");
  if (!(etsi.heading_deg >= 0.0)) throw ConfigError("policy.etsi.heading_deg", "must be non-negative");
  if (!(etsi.max_interval > 0.0)) throw ConfigError("policy.etsi.max_interval", "must be positive");
  if (!(etsi.min_heading_speed >= 0.0)) {
    throw ConfigError("policy.etsi.min_heading_speed", "must be non-negative");
  }
}

const InclusionRecord* InclusionHistory::find(ObjectId id) const {
  const auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

InclusionRecord kinematics_of(const Track& track, double now, const EtsiThresholds& thresholds) {
  InclusionRecord r;
  r.time = now;
  r.position = track.position();
  const Vec2 v = track.velocity();
  r.speed = v.norm();
  if (r.speed >= thresholds.min_heading_speed) r.heading = std::atan2(v.y(), v.x());
  return r;
}

std::vector<ObjectId> etsi_select(const EnvModel& lem, const InclusionHistory& history, double now,
                                  const EtsiThresholds& thresholds) {
  const double heading_limit = thresholds.heading_deg * std::numbers::pi / 180.0;
  std::vector<ObjectId> selected;
  for (const auto& [id, track] : lem.tracks()) {
    const InclusionRecord* last = history.find(id);
    if (last == nullptr) {
      selected.push_back(id);
      continue;
    }
    const InclusionRecord current = kinematics_of(track, now, thresholds);
    const bool moved = (current.position - last->position).norm() > thresholds.position;
    const bool speed_changed = std::abs(current.speed - last->speed) > thresholds.speed;
    const bool turned = current.heading && last->heading &&
                        std::abs(wrap_angle(*current.heading - *last->heading)) > heading_limit;
    const bool expired = now - last->time >= thresholds.max_interval;
    if (moved || speed_changed || turned || expired) selected.push_back(id);
  }
  return selected;
}

double accuracy_divergence(const Track& lem, const Track& v2x, bool use_means) {
  if (use_means) return kl_divergence(lem.x, lem.P, v2x.x, v2x.P);
  return kl_divergence(lem.P, v2x.P);
}

std::vector<ObjectId> accuracy_select(const EnvModel& lem, const EnvModel& v2x, const PolicyConfig& cfg) {
  std::vector<ObjectId> selected;
  for (const auto& [id, track] : lem.tracks()) {
    if (!(track.P.trace() < cfg.theta)) continue;
    const Track* remote = v2x.find(id);
    // Nobody around reports this object: treat the divergence as infinite.
    if (remote == nullptr || accuracy_divergence(track, *remote, cfg.kl_use_means) > cfg.gamma) {
      selected.push_back(id);
    }
  }
  return selected;
}

std::size_t cpm_size_bytes(std::size_t object_count, const PolicyConfig& cfg) {
  return cfg.header_bytes + cfg.per_object_bytes * object_count;
}

std::optional<Cpm> assemble_cpm(StationId ego, const SenderPose& pose,
                                const std::vector<ObjectId>& selection, const EnvModel& lem,
                                InclusionHistory& history, double now, const PolicyConfig& cfg) {
  if (selection.empty()) return std::nullopt;
  Cpm cpm;
  cpm.sender_id = ego;
  cpm.generation_time = now;
  cpm.sender_pose = pose;
  cpm.objects.reserve(selection.size());
  for (const ObjectId id : selection) {
    const Track* track = lem.find(id);
    if (track == nullptr) continue;
    const Track current = track->last_predict < now ? kf_predict(*track, now, lem.params()) : *track;
    ReportedObject object;
    object.object_id = id;
    object.state = current.x;
    object.covariance = current.P;
    object.measurement_time = now;
    cpm.objects.push_back(object);
    history.record(id, kinematics_of(current, now, cfg.etsi));
  }
  if (cpm.objects.empty()) return std::nullopt;
  cpm.size_bytes = cpm_size_bytes(cpm.objects.size(), cfg);
  return cpm;
}

}  // namespace cpsim
