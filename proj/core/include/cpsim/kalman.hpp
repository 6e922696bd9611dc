#pragma once

#include "cpsim/types.hpp"

namespace cpsim {

// Constant-velocity model over the state [x, y, vx, vy] with position-only
// observations.
struct MotionModelParams {
  // Discrete white-noise acceleration standard deviation, m/s^2.
  double accel_stddev = 0.8;
  // Velocity variance of a freshly created track, (m/s)^2.
  double initial_velocity_variance = 25.0;
  // Tracks without an update for longer than this are pruned, s.
  double stale_after = 2.0;

  void validate() const;
};

Mat4 transition_matrix(double dt);
// sigma_a^2 * G G^T with G = [dt^2/2, dt] per axis.
Mat4 process_noise(double dt, double accel_stddev);
Eigen::Matrix<double, 2, 4> observation_matrix();

struct Track {
  ObjectId object_id = 0;
  Vec4 x = Vec4::Zero();
  Mat4 P = Mat4::Identity();
  double last_update = 0.0;
  double last_predict = 0.0;
  double birth = 0.0;

  Vec2 position() const { return x.head<2>(); }
  Vec2 velocity() const { return x.tail<2>(); }
};

enum class MeasurementSource { kLocalSensor, kCpm };

struct Measurement {
  Vec2 z = Vec2::Zero();
  Mat2 R = Mat2::Identity();
  double timestamp = 0.0;
  MeasurementSource source = MeasurementSource::kLocalSensor;
  StationId sender = 0;  // meaningful for kCpm only
};

// New track at the measured position with zero velocity; P is R on the
// position block and the configured variance on the velocities.
Track make_track(ObjectId id, const Measurement& m, const MotionModelParams& model);

// x <- F x, P <- F P F^T + Q for dt = to_time - last_predict. Throws
// DomainError when dt < 0.
Track kf_predict(Track track, double to_time, const MotionModelParams& model);

// K = P H^T (H P H^T + R)^-1, x <- x + K (z - H x), P <- (I - K H) P, then
// P <- (P + P^T) / 2. Throws DomainError if the innovation covariance is not
// positive definite.
Track kf_update(Track track, const Measurement& m);

// In-place forms of the two steps above, used on the hot ingest path. They
// work on the 2x2 blocks of P directly and keep P exactly symmetric.
void kf_predict_in_place(Track& track, double to_time, const MotionModelParams& model);
void kf_update_in_place(Track& track, const Measurement& m);

// State mean extrapolated to `to_time` without touching the track.
Vec4 predicted_state(const Track& track, double to_time);

}  // namespace cpsim
