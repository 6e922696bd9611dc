#include <cmath>
#include <random>

#include <Eigen/Cholesky>
#include <gtest/gtest.h>

#include "cpsim/error.hpp"
#include "cpsim/kl_divergence.hpp"

namespace cpsim {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd random_spd(int k, std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd a(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) a(i, j) = n(gen);
  return a * a.transpose() + 0.5 * MatrixXd::Identity(k, k);
}

VectorXd random_vector(int k, std::mt19937_64& gen, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  VectorXd v(k);
  for (int i = 0; i < k; ++i) v(i) = n(gen);
  return v;
}

// Log-density up to the shared constant; the constant cancels in the ratio.
double log_density(const VectorXd& x, const VectorXd& mean, const Eigen::LLT<MatrixXd>& llt) {
  const VectorXd w = llt.matrixL().solve(x - mean);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (w.squaredNorm() + log_det);
}

// Monte Carlo relative entropy: E_p[log p(X) - log q(X)] with X ~ p.
double monte_carlo_kl(const VectorXd& m0, const MatrixXd& c0, const VectorXd& m1, const MatrixXd& c1,
                      int samples, std::mt19937_64& gen) {
  const Eigen::LLT<MatrixXd> l0(c0), l1(c1);
  const MatrixXd L0 = l0.matrixL();
  std::normal_distribution<double> n(0.0, 1.0);
  const int k = static_cast<int>(m0.size());
  VectorXd z(k);
  double sum = 0.0;
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < k; ++i) z(i) = n(gen);
    const VectorXd x = m0 + L0 * z;
    sum += log_density(x, m0, l0) - log_density(x, m1, l1);
  }
  return sum / samples;
}

TEST(KlDivergence, IdenticalDistributionsGiveZero) {
  std::mt19937_64 gen(1);
  for (int k : {2, 4}) {
    const MatrixXd c = random_spd(k, gen);
    const VectorXd m = random_vector(k, gen, 3.0);
    EXPECT_LT(kl_divergence(m, c, m, c), 1e-12);
  }
}

TEST(KlDivergence, ClosedFormScaledIdentity) {
  const MatrixXd c0 = MatrixXd::Identity(2, 2);
  const MatrixXd c1 = 2.0 * MatrixXd::Identity(2, 2);
  const double expected = 0.5 * (std::log(4.0) - 2.0 + 1.0);
  EXPECT_NEAR(kl_divergence(c0, c1), expected, 1e-12);
  EXPECT_NEAR(expected, 0.19315, 1e-5);

  std::mt19937_64 gen(2);
  const VectorXd zero = VectorXd::Zero(2);
  EXPECT_NEAR(monte_carlo_kl(zero, c0, zero, c1, 1000000, gen) / expected, 1.0, 0.02);
}

TEST(KlDivergence, NotSymmetric) {
  MatrixXd a = MatrixXd::Zero(2, 2), b = MatrixXd::Zero(2, 2);
  a.diagonal() << 1.0, 4.0;
  b.diagonal() << 4.0, 1.0;
  // Mirror-image diagonals with equal determinants are a symmetric special
  // case: both directions give 1/2 (1/4 + 4 - 2).
  EXPECT_NEAR(kl_divergence(a, b), 1.125, 1e-12);
  EXPECT_NEAR(kl_divergence(b, a), 1.125, 1e-12);
  b *= 2.0;
  EXPECT_GT(std::abs(kl_divergence(a, b) - kl_divergence(b, a)), 1e-3);
}

TEST(KlDivergence, MatchesMonteCarloOnRandomPairs) {
  std::mt19937_64 gen(31337);
  for (int k : {2, 4}) {
    for (int pair = 0; pair < 10; ++pair) {
      const MatrixXd c0 = random_spd(k, gen), c1 = random_spd(k, gen);
      const VectorXd m0 = random_vector(k, gen, 1.0), m1 = random_vector(k, gen, 1.0);
      const double exact = kl_divergence(m0, c0, m1, c1);
      const double estimate = monte_carlo_kl(m0, c0, m1, c1, 400000, gen);
      EXPECT_NEAR(estimate / exact, 1.0, 0.02) << "k=" << k << " pair " << pair << " exact " << exact;
    }
  }
}

TEST(KlDivergence, NonNegativeOnRandomPairs) {
  std::mt19937_64 gen(99);
  int negatives = 0;
  for (int i = 0; i < 10000; ++i) {
    const int k = i % 2 == 0 ? 2 : 4;
    const MatrixXd c0 = random_spd(k, gen), c1 = random_spd(k, gen);
    const VectorXd m0 = random_vector(k, gen, 2.0), m1 = random_vector(k, gen, 2.0);
    if (kl_divergence(m0, c0, m1, c1) < 0.0) ++negatives;
  }
  EXPECT_EQ(negatives, 0);
}

TEST(KlDivergence, RejectsBadInput) {
  const MatrixXd spd = MatrixXd::Identity(2, 2);
  MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(kl_divergence(spd, indefinite), DomainError);
  EXPECT_THROW(kl_divergence(spd, MatrixXd::Identity(3, 3)), DomainError);
}

}  // namespace
}  // namespace cpsim
