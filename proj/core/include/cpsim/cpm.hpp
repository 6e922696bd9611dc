#pragma once

#include <cstddef>
#include <vector>

#include "cpsim/types.hpp"

namespace cpsim {

// One object as carried in a Collective Perception Message: absolute state,
// full covariance, and the time the state refers to.
struct ReportedObject {
  ObjectId object_id = 0;
  Vec4 state = Vec4::Zero();
  Mat4 covariance = Mat4::Identity();
  double measurement_time = 0.0;
};

struct SenderPose {
  Vec2 position = Vec2::Zero();
  double heading = 0.0;
};

struct Cpm {
  StationId sender_id = 0;
  double generation_time = 0.0;
  SenderPose sender_pose;
  std::vector<ReportedObject> objects;
  std::size_t size_bytes = 0;
};

}  // namespace cpsim
