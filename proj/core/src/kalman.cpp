#include "cpsim/kalman.hpp"

#include <cmath>

#include "cpsim/error.hpp"

namespace cpsim {

void MotionModelParams::validate() const {
  if (!(accel_stddev >= 0.0)) throw ConfigError("motion_model.accel_stddev", "must be non-negative");
  if (!(initial_velocity_variance >= 0.0)) {
    throw ConfigError("motion_model.initial_velocity_variance", "must be non-negative");
  }
  if (!(stale_after > 0.0)) throw ConfigError("motion_model.stale_after", "must be positive");
}

Mat4 transition_matrix(double dt) {
  Mat4 F = Mat4::Identity();
  F(0, 2) = dt;
  F(1, 3) = dt;
  return F;
}

Mat4 process_noise(double dt, double accel_stddev) {
  const double q = accel_stddev * accel_stddev;
  const double dt2 = dt * dt;
  const double pp = 0.25 * dt2 * dt2 * q;
  const double pv = 0.5 * dt2 * dt * q;
  const double vv = dt2 * q;
  Mat4 Q = Mat4::Zero();
  Q(0, 0) = pp;
  Q(1, 1) = pp;
  Q(0, 2) = Q(2, 0) = pv;
  Q(1, 3) = Q(3, 1) = pv;
  Q(2, 2) = vv;
  Q(3, 3) = vv;
  return Q;
}

Eigen::Matrix<double, 2, 4> observation_matrix() {
  Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
  H(0, 0) = 1.0;
  H(1, 1) = 1.0;
  return H;
}

Track make_track(ObjectId id, const Measurement& m, const MotionModelParams& model) {
  Track t;
  t.object_id = id;
  t.x << m.z.x(), m.z.y(), 0.0, 0.0;
  t.P = Mat4::Zero();
  t.P.topLeftCorner<2, 2>() = m.R;
  t.P(2, 2) = model.initial_velocity_variance;
  t.P(3, 3) = model.initial_velocity_variance;
  t.last_update = m.timestamp;
  t.last_predict = m.timestamp;
  t.birth = m.timestamp;
  return t;
}

void kf_predict_in_place(Track& track, double to_time, const MotionModelParams& model) {
  const double dt = to_time - track.last_predict;
  if (dt < 0.0) throw DomainError("kf_predict: negative time step");
  if (dt == 0.0) return;
  track.x.head<2>() += dt * track.x.tail<2>();

  // F = [I dtI; 0 I] acting on the position/velocity blocks.
  const double q = model.accel_stddev * model.accel_stddev;
  const double dt2 = dt * dt;
  const double qpp = 0.25 * dt2 * dt2 * q, qpv = 0.5 * dt2 * dt * q, qvv = dt2 * q;
  Mat4& P = track.P;
  const Mat2 pv = P.topRightCorner<2, 2>();
  const Mat2 vv = P.bottomRightCorner<2, 2>();
  const Mat2 cross = pv + dt * vv;  // new position/velocity block before Q
  Mat2 pp = P.topLeftCorner<2, 2>() + dt * (pv + pv.transpose()) + dt2 * vv;
  pp(0, 0) += qpp;
  pp(1, 1) += qpp;
  pp(1, 0) = pp(0, 1);
  P.topLeftCorner<2, 2>() = pp;
  P(0, 2) = P(2, 0) = cross(0, 0) + qpv;
  P(1, 3) = P(3, 1) = cross(1, 1) + qpv;
  P(0, 3) = P(3, 0) = cross(0, 1);
  P(1, 2) = P(2, 1) = cross(1, 0);
  P(2, 2) += qvv;
  P(3, 3) += qvv;
  track.last_predict = to_time;
}

void kf_update_in_place(Track& track, const Measurement& m) {
  const Mat2 S = track.P.topLeftCorner<2, 2>() + m.R;
  // 2x2 positive-definiteness test (Sylvester) and closed-form inverse; the
  // generic LLT solve goes through blocked kernels that dominate the runtime.
  const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
  if (!(S(0, 0) > 0.0) || !(det > 0.0) || !std::isfinite(det)) {
    throw DomainError("kf_update: singular innovation covariance");
  }
  Mat2 S_inv;
  S_inv << S(1, 1), -S(0, 1), -S(1, 0), S(0, 0);
  S_inv /= det;
  // P H^T is the first two columns of P; (I - K H) P = P - K (H P).
  const Eigen::Matrix<double, 4, 2> PHt = track.P.leftCols<2>();
  const Eigen::Matrix<double, 4, 2> K = PHt * S_inv;
  track.x += K * (m.z - track.x.head<2>());
  const Mat4 reduction = K * PHt.transpose();
  track.P -= 0.5 * (reduction + reduction.transpose());
  track.last_update = m.timestamp;
}

Track kf_predict(Track track, double to_time, const MotionModelParams& model) {
  kf_predict_in_place(track, to_time, model);
  return track;
}

Track kf_update(Track track, const Measurement& m) {
  kf_update_in_place(track, m);
  return track;
}

Vec4 predicted_state(const Track& track, double to_time) {
  return transition_matrix(to_time - track.last_predict) * track.x;
}

}  // namespace cpsim
