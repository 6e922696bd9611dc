#pragma once

#include "cpsim/env_model.hpp"
#include "cpsim/policy.hpp"
#include "cpsim/types.hpp"

namespace cpsim {

// Per-vehicle V2X state: three independent environment models, the CPM
// inclusion history, and the offset of its MAC hand-off within a tick.
struct Station {
  Station(StationId station_id, const MotionModelParams& params, SimTimeNs offset)
      : id(station_id),
        lem(ModelKind::kLem, params),
        v2x(ModelKind::kV2x, params),
        fused(ModelKind::kFused, params),
        access_offset(offset) {}

  const EnvModel& model(ModelKind kind) const {
    switch (kind) {
      case ModelKind::kLem:
        return lem;
      case ModelKind::kV2x:
        return v2x;
      case ModelKind::kFused:
        break;
    }
    return fused;
  }

  StationId id;
  EnvModel lem;
  EnvModel v2x;
  EnvModel fused;
  InclusionHistory history;
  SimTimeNs access_offset;
};

}  // namespace cpsim
