#include <gtest/gtest.h>

#include "cpsim/env_model.hpp"
#include "cpsim/error.hpp"

namespace cpsim {
namespace {

Detection detection(ObjectId id, double x, double y, double t, double var = 0.25) {
  Detection d;
  d.object_id = id;
  d.measured_position = {x, y};
  d.noise_cov = Mat2::Identity() * var;
  d.timestamp = t;
  return d;
}

ReportedObject report(ObjectId id, double x, double y, double t, double var) {
  ReportedObject r;
  r.object_id = id;
  r.state << x, y, 20.0, 0.0;
  r.covariance = Vec4(var, var, 1.0, 1.0).asDiagonal();
  r.measurement_time = t;
  return r;
}

Cpm cpm_from(StationId sender, double t, std::vector<ReportedObject> objects) {
  Cpm c;
  c.sender_id = sender;
  c.generation_time = t;
  c.objects = std::move(objects);
  c.size_bytes = 121 + 35 * c.objects.size();
  return c;
}

TEST(EnvModel, FirstDetectionCreatesTrackAtMeasurement) {
  EnvModel lem(ModelKind::kLem, MotionModelParams{});
  const Detection d = detection(7, 12.0, 3.5, 1.0);
  lem_ingest(lem, std::vector<Detection>{d});
  const Track* t = lem.find(7);
  ASSERT_NE(t, nullptr);
  EXPECT_EQ(t->position(), Vec2(12.0, 3.5));
  EXPECT_EQ(t->velocity(), Vec2::Zero());
  EXPECT_DOUBLE_EQ(t->P(2, 2), 25.0);
}

TEST(EnvModel, SecondDetectionMovesVelocityTowardsTruth) {
  EnvModel lem(ModelKind::kLem, MotionModelParams{});
  lem_ingest(lem, std::vector<Detection>{detection(1, 0.0, 0.0, 0.0)});
  const double err_before = (lem.find(1)->velocity() - Vec2(20.0, 0.0)).norm();
  lem_ingest(lem, std::vector<Detection>{detection(1, 2.0, 0.0, 0.1)});
  const double err_after = (lem.find(1)->velocity() - Vec2(20.0, 0.0)).norm();
  EXPECT_LT(err_after, err_before);
}

TEST(EnvModel, EmptyScanLeavesTracksUntouched) {
  EnvModel lem(ModelKind::kLem, MotionModelParams{});
  lem_ingest(lem, std::vector<Detection>{detection(1, 0.0, 0.0, 0.0)});
  const Track before = *lem.find(1);
  lem_ingest(lem, std::vector<Detection>{});
  EXPECT_EQ(lem.find(1)->x, before.x);
  EXPECT_EQ(lem.find(1)->P, before.P);
}

TEST(EnvModel, PruneStaleBoundary) {
  EnvModel lem(ModelKind::kLem, MotionModelParams{});
  lem_ingest(lem, std::vector<Detection>{detection(1, 0.0, 0.0, 0.0), detection(2, 5.0, 0.0, 0.2)});
  EXPECT_TRUE(lem.prune_stale(1.0).empty());
  EXPECT_EQ(lem.size(), 2u);
  const auto removed = lem.prune_stale(2.1);  // track 1 is 2.1 s old, track 2 is 1.9 s old
  ASSERT_EQ(removed.size(), 1u);
  EXPECT_EQ(removed[0], 1u);
  EXPECT_NE(lem.find(2), nullptr);
}

TEST(EnvModel, CpmCreatesV2xTrack) {
  EnvModel v2x(ModelKind::kV2x, MotionModelParams{});
  const auto result = v2x_ingest(v2x, cpm_from(5, 1.0, {report(9, 100.0, 0.0, 1.0, 0.3)}), 1, 1.0);
  EXPECT_FALSE(result.dropped);
  ASSERT_EQ(result.accepted.size(), 1u);
  ASSERT_NE(v2x.find(9), nullptr);
  EXPECT_EQ(v2x.find(9)->position(), Vec2(100.0, 0.0));
  EXPECT_DOUBLE_EQ(v2x.find(9)->P(0, 0), 0.3);
}

TEST(EnvModel, OwnCpmIgnoredUnlessLoopback) {
  EnvModel v2x(ModelKind::kV2x, MotionModelParams{});
  const Cpm own = cpm_from(3, 1.0, {report(9, 100.0, 0.0, 1.0, 0.3)});
  EXPECT_TRUE(v2x_ingest(v2x, own, 3, 1.0).accepted.empty());
  EXPECT_TRUE(v2x.empty());
  v2x_ingest(v2x, own, 3, 1.0, /*loopback=*/true);
  EXPECT_EQ(v2x.size(), 1u);
}

TEST(EnvModel, ReportsAboutReceiverSkipped) {
  EnvModel v2x(ModelKind::kV2x, MotionModelParams{});
  v2x_ingest(v2x, cpm_from(5, 1.0, {report(1, 10.0, 0.0, 1.0, 0.3)}), 1, 1.0);
  EXPECT_TRUE(v2x.empty());
}

TEST(EnvModel, MalformedCpmDroppedWhole) {
  EnvModel v2x(ModelKind::kV2x, MotionModelParams{});
  ReportedObject bad = report(8, 10.0, 0.0, 1.0, 0.3);
  bad.covariance(0, 0) = -1.0;
  const auto result = v2x_ingest(v2x, cpm_from(5, 1.0, {report(9, 10.0, 0.0, 1.0, 0.3), bad}), 1, 1.0);
  EXPECT_TRUE(result.dropped);
  EXPECT_TRUE(v2x.empty());
}

TEST(EnvModel, OlderReportPropagatedToReceiveTime) {
  EnvModel v2x(ModelKind::kV2x, MotionModelParams{});
  v2x_ingest(v2x, cpm_from(5, 0.9, {report(9, 100.0, 0.0, 0.9, 0.3)}), 1, 1.0);
  EXPECT_NEAR(v2x.find(9)->position().x(), 102.0, 1e-12);
  EXPECT_GT(v2x.find(9)->P(0, 0), 0.3);
}

TEST(EnvModel, TwoSendersSameTickTightenCovariance) {
  const double now = 1.0;
  EnvModel both(ModelKind::kV2x, MotionModelParams{});
  EnvModel only_a(ModelKind::kV2x, MotionModelParams{});
  EnvModel only_b(ModelKind::kV2x, MotionModelParams{});
  // Seed every model with the same prior.
  for (EnvModel* m : {&both, &only_a, &only_b}) {
    v2x_ingest(*m, cpm_from(4, 0.5, {report(9, 89.0, 0.0, 0.5, 2.0)}), 1, 0.5);
  }
  const Cpm a = cpm_from(5, now, {report(9, 100.0, 0.0, now, 0.5)});
  const Cpm b = cpm_from(6, now, {report(9, 100.4, 0.1, now, 0.8)});
  v2x_ingest(both, a, 1, now);
  v2x_ingest(both, b, 1, now);
  v2x_ingest(only_a, a, 1, now);
  v2x_ingest(only_b, b, 1, now);
  const double t_both = both.find(9)->P.trace();
  EXPECT_LE(t_both, only_a.find(9)->P.trace() + 1e-12);
  EXPECT_LE(t_both, only_b.find(9)->P.trace() + 1e-12);
}

TEST(EnvModel, FusedEqualsLemWithoutV2xTraffic) {
  EnvModel lem(ModelKind::kLem, MotionModelParams{});
  EnvModel fused(ModelKind::kFused, MotionModelParams{});
  for (int k = 0; k < 10; ++k) {
    const std::vector<Detection> scan{detection(2, 3.0 * k, 0.1 * k, 0.1 * k), detection(4, 50.0 - k, 3.5, 0.1 * k)};
    lem_ingest(lem, scan);
    for (const Detection& d : scan) fused_ingest(fused, d.object_id, to_measurement(d));
  }
  ASSERT_EQ(lem.size(), fused.size());
  for (const auto& [id, track] : lem.tracks()) {
    EXPECT_EQ(fused.find(id)->x, track.x);
    EXPECT_EQ(fused.find(id)->P, track.P);
  }
}

TEST(EnvModel, FusedEqualsV2xWithoutLocalDetections) {
  EnvModel v2x(ModelKind::kV2x, MotionModelParams{});
  EnvModel fused(ModelKind::kFused, MotionModelParams{});
  for (int k = 0; k < 5; ++k) {
    const double t = 0.1 * k;
    const auto result = v2x_ingest(v2x, cpm_from(5, t, {report(9, 200.0 + 2.0 * k, 0.0, t, 0.4)}), 1, t);
    for (const auto& [id, m] : result.accepted) fused_ingest(fused, id, m);
  }
  EXPECT_EQ(fused.find(9)->x, v2x.find(9)->x);
  EXPECT_EQ(fused.find(9)->P, v2x.find(9)->P);
}

TEST(EnvModel, FusedNoLessCertainThanEitherSource) {
  EnvModel lem(ModelKind::kLem, MotionModelParams{});
  EnvModel v2x(ModelKind::kV2x, MotionModelParams{});
  EnvModel fused(ModelKind::kFused, MotionModelParams{});
  for (int k = 0; k < 10; ++k) {
    const double t = 0.1 * k;
    const Detection d = detection(9, 2.0 * k + 0.1, 0.05, t, 0.5);
    lem_ingest(lem, std::vector<Detection>{d});
    fused_ingest(fused, 9, to_measurement(d));
    const auto result = v2x_ingest(v2x, cpm_from(5, t, {report(9, 2.0 * k - 0.1, 0.0, t, 0.3)}), 1, t);
    for (const auto& [id, m] : result.accepted) fused_ingest(fused, id, m);
    const double f = fused.find(9)->P.trace();
    EXPECT_LE(f, std::min(lem.find(9)->P.trace(), v2x.find(9)->P.trace()) + 1e-9) << "k=" << k;
  }
}

TEST(EnvModel, ModelsDoNotShareStorage) {
  EnvModel a(ModelKind::kLem, MotionModelParams{});
  lem_ingest(a, std::vector<Detection>{detection(1, 0.0, 0.0, 0.0)});
  EnvModel b = a;
  lem_ingest(b, std::vector<Detection>{detection(1, 1.0, 0.0, 0.1)});
  EXPECT_EQ(a.find(1)->position(), Vec2(0.0, 0.0));
}

TEST(EnvModel, ModelKindNames) {
  EXPECT_EQ(parse_model_kind("FUSED"), ModelKind::kFused);
  EXPECT_EQ(to_string(ModelKind::kV2x), "v2x");
  EXPECT_THROW(parse_model_kind("both"), ConfigError);
}

}  // namespace
}  // namespace cpsim
