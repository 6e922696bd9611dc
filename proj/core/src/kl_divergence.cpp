#include "cpsim/kl_divergence.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "cpsim/error.hpp"

namespace cpsim {

namespace {

Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::Ref<const Eigen::MatrixXd>& cov, const char* name) {
  if (cov.rows() != cov.cols() || cov.rows() == 0) {
    throw DomainError(std::string("kl_divergence: ") + name + " must be square and non-empty");
  }
  if (!cov.allFinite()) throw DomainError(std::string("kl_divergence: ") + name + " is not finite");
  const double scale = 1.0 + cov.cwiseAbs().maxCoeff();
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw DomainError(std::string("kl_divergence: ") + name + " is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw DomainError(std::string("kl_divergence: ") + name + " is not positive definite");
  }
  return llt;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

double kl_divergence(const Eigen::Ref<const Eigen::VectorXd>& mean0,
                     const Eigen::Ref<const Eigen::MatrixXd>& cov0,
                     const Eigen::Ref<const Eigen::VectorXd>& mean1,
                     const Eigen::Ref<const Eigen::MatrixXd>& cov1) {
  const Eigen::Index k = cov0.rows();
  if (cov1.rows() != k || mean0.size() != k || mean1.size() != k) {
    throw DomainError("kl_divergence: dimension mismatch");
  }
  const auto llt0 = factor_spd(cov0, "cov0");
  const auto llt1 = factor_spd(cov1, "cov1");

  // tr(cov1^-1 cov0) = ||L1^-1 L0||_F^2
  const Eigen::MatrixXd L0 = llt0.matrixL();
  const Eigen::MatrixXd whitened = llt1.matrixL().solve(L0);
  const double trace_term = whitened.squaredNorm();

  const Eigen::VectorXd diff = mean1 - mean0;
  const double mahalanobis = llt1.matrixL().solve(diff).squaredNorm();

  const double value =
      0.5 * (log_det(llt1) - log_det(llt0) - static_cast<double>(k) + trace_term + mahalanobis);
  return std::max(0.0, value);
}

double kl_divergence(const Eigen::Ref<const Eigen::MatrixXd>& cov0,
                     const Eigen::Ref<const Eigen::MatrixXd>& cov1) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(cov0.rows());
  return kl_divergence(zero, cov0, zero, cov1);
}

}  // namespace cpsim
