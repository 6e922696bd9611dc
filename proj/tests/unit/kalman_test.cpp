#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "cpsim/error.hpp"
#include "cpsim/kalman.hpp"

namespace cpsim {
namespace {

Measurement at(double x, double y, double t, double r = 1.0) {
  Measurement m;
  m.z = {x, y};
  m.R = Mat2::Identity() * r;
  m.timestamp = t;
  return m;
}

TEST(Kalman, PredictZeroStepIsIdentity) {
  MotionModelParams model;
  Track t = make_track(1, at(3.0, 4.0, 2.0), model);
  t.x.tail<2>() << 5.0, -1.0;
  const Track same = kf_predict(t, 2.0, model);
  EXPECT_EQ(same.x, t.x);
  EXPECT_EQ(same.P, t.P);
}

TEST(Kalman, PredictConstantVelocity) {
  Track t;
  t.x << 0.0, 0.0, 10.0, 0.0;
  const Track p = kf_predict(t, 0.1, MotionModelParams{});
  EXPECT_NEAR(p.x(0), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(p.x(1), 0.0);
  EXPECT_DOUBLE_EQ(p.x(2), 10.0);
  EXPECT_GE(p.P.trace(), t.P.trace());
  EXPECT_THROW(kf_predict(p, 0.05, MotionModelParams{}), DomainError);
}

TEST(Kalman, ScalarStep) {
  Track t;
  t.P = Vec4(1.0, 1.0, 25.0, 25.0).asDiagonal();
  const Track u = kf_update(t, at(1.0, 0.0, 0.0));
  EXPECT_NEAR(u.x(0), 0.5, 1e-12);
  EXPECT_NEAR(u.P(0, 0), 0.5, 1e-12);
}

TEST(Kalman, FiveStepScalarSequence) {
  // Repeated updates of one coordinate with P0 = R = 1 and no motion:
  // K_k = 1 / (k + 1), P_k = 1 / (k + 1), x_k = running mean of {0, z_1..z_k}.
  const double z[5] = {1.0, 2.0, 0.5, 3.0, -1.0};
  const double x_expected[5] = {0.5, 1.0, 0.875, 1.3, 5.5 / 6.0};
  const double p_expected[5] = {1.0 / 2, 1.0 / 3, 1.0 / 4, 1.0 / 5, 1.0 / 6};
  Track t;
  t.P = Vec4(1.0, 1.0, 25.0, 25.0).asDiagonal();
  for (int k = 0; k < 5; ++k) {
    t = kf_update(t, at(z[k], 0.0, 0.0));
    EXPECT_NEAR(t.x(0), x_expected[k], 1e-9) << "step " << k;
    EXPECT_NEAR(t.P(0, 0), p_expected[k], 1e-9) << "step " << k;
    EXPECT_NEAR(t.x(2), 0.0, 1e-12);
  }
}

// Independent per-axis filter written out in scalars.
struct AxisFilter {
  double x = 0, v = 0, pxx = 1, pxv = 0, pvv = 25;
  void predict(double dt, double q) {
    x += v * dt;
    const double nxx = pxx + 2 * dt * pxv + dt * dt * pvv + 0.25 * dt * dt * dt * dt * q;
    const double nxv = pxv + dt * pvv + 0.5 * dt * dt * dt * q;
    const double nvv = pvv + dt * dt * q;
    pxx = nxx;
    pxv = nxv;
    pvv = nvv;
  }
  void update(double z, double r) {
    const double s = pxx + r;
    const double kx = pxx / s, kv = pxv / s;
    const double innovation = z - x;
    x += kx * innovation;
    v += kv * innovation;
    const double nxx = (1 - kx) * pxx;
    const double nxv = (1 - kx) * pxv;
    const double nvv = pvv - kv * pxv;
    pxx = nxx;
    pxv = nxv;
    pvv = nvv;
  }
};

TEST(Kalman, MatchesScalarAxisFilterWithMotion) {
  MotionModelParams model;
  model.accel_stddev = 0.8;
  const double q = model.accel_stddev * model.accel_stddev;
  Track t = make_track(1, at(0.0, 0.0, 0.0), model);
  AxisFilter ax;
  const double zs[5] = {3.1, 5.8, 9.2, 11.9, 15.2};
  for (int k = 0; k < 5; ++k) {
    const double time = 0.1 * (k + 1);
    t = kf_update(kf_predict(t, time, model), at(zs[k], 0.0, time));
    ax.predict(0.1, q);
    ax.update(zs[k], 1.0);
    EXPECT_NEAR(t.x(0), ax.x, 1e-9);
    EXPECT_NEAR(t.x(2), ax.v, 1e-9);
    EXPECT_NEAR(t.P(0, 0), ax.pxx, 1e-9);
    EXPECT_NEAR(t.P(0, 2), ax.pxv, 1e-9);
    EXPECT_NEAR(t.P(2, 2), ax.pvv, 1e-9);
  }
}

TEST(Kalman, HugeNoiseMeasurementIsIgnored) {
  Track t;
  t.x << 1.0, 2.0, 3.0, 4.0;
  t.P = Vec4(2.0, 2.0, 5.0, 5.0).asDiagonal();
  const Track u = kf_update(t, at(100.0, -100.0, 0.0, 1e12));
  EXPECT_LT((u.x - t.x).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((u.P - t.P).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Kalman, UpdateShrinksTrace) {
  Track t;
  t.P = Vec4(2.0, 3.0, 5.0, 5.0).asDiagonal();
  const Track u = kf_update(t, at(0.0, 0.0, 0.0, 4.0));
  EXPECT_LT(u.P.trace(), t.P.trace());
  const Mat2 block = u.P.topLeftCorner<2, 2>();
  const Mat2 prior = t.P.topLeftCorner<2, 2>();
  EXPECT_LT(block.trace(), prior.trace());
}

TEST(Kalman, ExactConvergenceWithoutNoise) {
  MotionModelParams model;
  model.accel_stddev = 0.0;
  Track t = make_track(1, at(10.0, 2.0, 0.0, 1e-300), model);
  t.P.topLeftCorner<2, 2>().setZero();
  t = kf_update(kf_predict(t, 1.0, model), at(35.0, 2.0, 1.0, 0.0));
  EXPECT_NEAR(t.x(0), 35.0, 1e-9);
  EXPECT_NEAR(t.x(2), 25.0, 1e-9);
  EXPECT_NEAR(t.x(3), 0.0, 1e-9);
}

TEST(Kalman, NonPositiveInnovationRejected) {
  Track t;
  t.P = Mat4::Zero();
  Measurement m = at(0.0, 0.0, 0.0, 0.0);
  EXPECT_THROW(kf_update(t, m), DomainError);
}

TEST(Kalman, CovarianceStaysSymmetricPsdUnderRandomSequences) {
  std::mt19937_64 gen(1234);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MotionModelParams model;
  int failures = 0;
  for (int seq = 0; seq < 100000; ++seq) {
    const double r0 = 0.01 + 5.0 * u(gen);
    Track t = make_track(1, at(u(gen), u(gen), 0.0, r0), model);
    double time = 0.0;
    for (int op = 0; op < 6; ++op) {
      if (u(gen) < 0.5) {
        const double before = t.P.trace();
        time += 0.5 * u(gen);
        t = kf_predict(t, time, model);
        if (t.P.trace() < before - 1e-12) ++failures;
      } else {
        Measurement m = at(10.0 * u(gen), 10.0 * u(gen), time);
        const double a = 0.01 + 4.0 * u(gen), b = 0.01 + 4.0 * u(gen), c = (u(gen) - 0.5) * std::sqrt(a * b);
        m.R << a, c, c, b;
        const double before = t.P.topLeftCorner<2, 2>().trace();
        t = kf_update(t, m);
        if (t.P.topLeftCorner<2, 2>().trace() > before + 1e-12) ++failures;
      }
      if (!(t.P - t.P.transpose()).isZero(0.0)) ++failures;
      const double min_eig = Eigen::SelfAdjointEigenSolver<Mat4>(t.P, Eigen::EigenvaluesOnly).eigenvalues()(0);
      if (min_eig < -1e-10 * (1.0 + t.P.trace())) ++failures;
    }
  }
  EXPECT_EQ(failures, 0);
}

}  // namespace
}  // namespace cpsim
