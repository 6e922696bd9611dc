#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "cpsim/cpm.hpp"
#include "cpsim/env_model.hpp"

namespace cpsim {

enum class PolicyMode { kEtsi, kAccuracy };

std::string_view to_string(PolicyMode mode);
// "etsi" or "accuracy", case-insensitive. Throws ConfigError.
PolicyMode parse_policy_mode(std::string_view text);

// Dynamics-based inclusion thresholds.
struct EtsiThresholds {
  double position = 4.0;       // m, strict >
  double speed = 0.5;          // m/s, strict >
  double heading_deg = 4.0;    // degrees, strict >
  double max_interval = 1.0;   // s, inclusive >=
  // Below this speed a track's heading is undefined and the heading rule is
  // skipped.
  double min_heading_speed = 0.1;
};

struct PolicyConfig {
  PolicyMode mode = PolicyMode::kEtsi;
  double theta = 1.0;  // trace gate, strict <
  double gamma = 3.0;  // divergence gate, strict >
  bool kl_use_means = true;
  EtsiThresholds etsi;
  double check_period = 0.1;
  bool self_echo = true;
  std::size_t header_bytes = 121;
  std::size_t per_object_bytes = 35;

  void validate() const;
};

// Kinematics of an object as of its last inclusion in a CPM.
struct InclusionRecord {
  double time = 0.0;
  Vec2 position = Vec2::Zero();
  double speed = 0.0;
  std::optional<double> heading;  // radians; empty when the track was near-stationary
};

class InclusionHistory {
 public:
  const InclusionRecord* find(ObjectId id) const;
  void record(ObjectId id, const InclusionRecord& record) { entries_[id] = record; }
  void forget(ObjectId id) { entries_.erase(id); }
  std::size_t size() const { return entries_.size(); }
  const std::map<ObjectId, InclusionRecord>& entries() const { return entries_; }

 private:
  std::map<ObjectId, InclusionRecord> entries_;
};

// Speed and heading (if defined) of a track state.
InclusionRecord kinematics_of(const Track& track, double now, const EtsiThresholds& thresholds);

// Object ids (ascending) meeting any of the five dynamics rules: no history;
// position change > threshold; speed change > threshold; heading change >
// threshold (shortest angle); time since last inclusion >= max interval.
std::vector<ObjectId> etsi_select(const EnvModel& lem, const InclusionHistory& history, double now,
                                  const EtsiThresholds& thresholds);

// Object ids (ascending) passing trace(P_LEM) < theta and then either having
// no V2X track or D_KL(N_LEM || N_V2X) > gamma. Both models must already be
// predicted to the same instant.
std::vector<ObjectId> accuracy_select(const EnvModel& lem, const EnvModel& v2x, const PolicyConfig& cfg);

// Divergence used by the accuracy gate, with or without the mean terms.
double accuracy_divergence(const Track& lem, const Track& v2x, bool use_means);

std::size_t cpm_size_bytes(std::size_t object_count, const PolicyConfig& cfg);

// Builds the CPM for `selection` from LEM states and records each object in
// the history. Returns nullopt (and leaves history untouched) when the
// selection is empty.
std::optional<Cpm> assemble_cpm(StationId ego, const SenderPose& pose,
                                const std::vector<ObjectId>& selection, const EnvModel& lem,
                                InclusionHistory& history, double now, const PolicyConfig& cfg);

}  // namespace cpsim
