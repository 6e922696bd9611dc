#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "cpsim/error.hpp"
#include "cpsim/sensor.hpp"

namespace cpsim {
namespace {

Vehicle car(VehicleId id, double x, double y) {
  Vehicle v;
  v.id = id;
  v.position = {x, y};
  v.speed = 30.0;
  v.desired_speed = 30.0;
  return v;
}

TEST(Sensor, UnobstructedTargetFullyVisible) {
  const Vehicle ego = car(1, 0.0, 0.0);
  const Vehicle target = car(2, 40.0, 3.5);
  EXPECT_DOUBLE_EQ(visible_cross_section(ego, target, {}, 85.0), 1.0);
}

TEST(Sensor, TargetBehindNearerObstacleIsHidden) {
  const Vehicle ego = car(1, 0.0, 0.0);
  const Vehicle target = car(2, 40.0, 0.0);
  const Vehicle blocker = car(3, 10.0, 0.0);
  const std::vector<const Vehicle*> obstacles{&blocker};
  EXPECT_DOUBLE_EQ(visible_cross_section(ego, target, obstacles, 85.0), 0.0);
}

TEST(Sensor, FartherObstacleDoesNotOcclude) {
  const Vehicle ego = car(1, 0.0, 0.0);
  const Vehicle target = car(2, 10.0, 0.0);
  const Vehicle behind = car(3, 40.0, 0.0);
  const std::vector<const Vehicle*> obstacles{&behind};
  EXPECT_DOUBLE_EQ(visible_cross_section(ego, target, obstacles, 85.0), 1.0);
}

TEST(Sensor, HalfOccludedTarget) {
  // The target at (20, 0) subtends [-a, a] with a = atan(0.9 / 17.75). An
  // obstacle whose lower edge lies on the x axis and whose upper edge is
  // steeper than a covers exactly [0, a].
  const Vehicle ego = car(1, 0.0, 0.0);
  const Vehicle target = car(2, 20.0, 0.0);
  const Vehicle blocker = car(3, 10.0, 0.9);
  const double a = std::atan2(0.9, 20.0 - 2.25);
  const double blocker_top = std::atan2(1.8, 10.0 - 2.25);
  ASSERT_GT(blocker_top, a);
  const std::vector<const Vehicle*> obstacles{&blocker};
  EXPECT_NEAR(visible_cross_section(ego, target, obstacles, 85.0), 0.5, 1e-6);
}

TEST(Sensor, OutOfRangeIsInvisible) {
  const Vehicle ego = car(1, 0.0, 0.0);
  const Vehicle target = car(2, 86.0, 0.0);
  EXPECT_DOUBLE_EQ(visible_cross_section(ego, target, {}, 85.0), 0.0);
}

TEST(Sensor, UncoveredMeasureMergesOverlaps) {
  const AngularInterval target{0.0, 1.0};
  EXPECT_DOUBLE_EQ(uncovered_measure(target, {{0.1, 0.3}, {0.2, 0.4}, {0.9, 2.0}}), 0.6);
  EXPECT_DOUBLE_EQ(uncovered_measure(target, {{-1.0, 2.0}}), 0.0);
}

TEST(Sensor, DetectionStddevForm) {
  const SensorParams p;
  const auto [sx0, sy0] = detection_stddev(1.0, 0.0, p);
  EXPECT_DOUBLE_EQ(sx0, p.sigma_min);
  EXPECT_DOUBLE_EQ(sy0, p.sigma_min);
  EXPECT_NEAR(detection_stddev(1.0, p.range, p).first, 1.5, 1e-12);
  double previous = 0.0;
  for (double c = 1.0; c > 0.01; c -= 0.05) {
    const double s = detection_stddev(c, 40.0, p).first;
    EXPECT_GE(s, previous);
    previous = s;
  }
  EXPECT_THROW(detection_stddev(0.0, 10.0, p), DomainError);
  EXPECT_THROW(detection_stddev(1.0, 90.0, p), DomainError);
}

TEST(Sensor, NothingInRangeGivesNoDetections) {
  const Vehicle ego = car(1, 0.0, 0.0);
  const Vehicle far = car(2, 100.0, 0.0);
  const std::vector<const Vehicle*> neighbors{&ego, &far};
  RngStream rng(1);
  EXPECT_TRUE(sense(ego, neighbors, rng, 0.0, SensorParams{}).empty());
}

TEST(Sensor, ZeroNoiseReturnsGroundTruth) {
  SensorParams p;
  p.sigma_min = 0.0;
  p.alpha_dist = 0.0;
  p.beta_occl = 0.0;
  const Vehicle ego = car(1, 0.0, 0.0);
  const Vehicle a = car(2, 30.0, 3.5);
  const Vehicle b = car(3, -50.0, -3.5);
  const std::vector<const Vehicle*> neighbors{&b, &ego, &a};
  RngStream rng(1);
  const auto detections = sense(ego, neighbors, rng, 2.0, p);
  ASSERT_EQ(detections.size(), 2u);
  EXPECT_EQ(detections[0].object_id, 2u);
  EXPECT_EQ(detections[1].object_id, 3u);
  EXPECT_EQ(detections[0].measured_position, a.position);
  EXPECT_EQ(detections[1].measured_position, b.position);
  EXPECT_DOUBLE_EQ(detections[0].timestamp, 2.0);
}

TEST(Sensor, SampleVarianceMatchesDeclaredCovariance) {
  const SensorParams p;
  const Vehicle ego = car(1, 0.0, 0.0);
  const Vehicle target = car(2, 50.0, 3.5);
  const std::vector<const Vehicle*> neighbors{&target};
  RngStream rng(77);
  const int n = 10000;
  double sx = 0.0, sxx = 0.0, sy = 0.0, syy = 0.0, declared = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto d = sense(ego, neighbors, rng, 0.0, p);
    ASSERT_EQ(d.size(), 1u);
    const Vec2 e = d[0].measured_position - target.position;
    sx += e.x();
    sxx += e.x() * e.x();
    sy += e.y();
    syy += e.y() * e.y();
    declared = d[0].noise_cov(0, 0);
  }
  const double var_x = (sxx - sx * sx / n) / (n - 1);
  const double var_y = (syy - sy * sy / n) / (n - 1);
  EXPECT_NEAR(var_x / declared, 1.0, 0.05);
  EXPECT_NEAR(var_y / declared, 1.0, 0.05);
}

}  // namespace
}  // namespace cpsim
