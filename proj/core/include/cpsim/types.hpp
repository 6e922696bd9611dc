#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace cpsim {

using VehicleId = std::uint32_t;
using ObjectId = VehicleId;
using StationId = VehicleId;

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

// Channel timeline in integer nanoseconds. Everything above the MAC works in
// double seconds on the tick grid.
using SimTimeNs = std::int64_t;

inline constexpr SimTimeNs kNanosPerSecond = 1'000'000'000;

SimTimeNs to_nanos(double seconds);
inline double to_seconds(SimTimeNs ns) { return static_cast<double>(ns) * 1e-9; }

// Wraps an angle to (-pi, pi].
double wrap_angle(double radians);

}  // namespace cpsim
