#pragma once

#include <Eigen/Core>

namespace cpsim {

// Relative entropy D_KL(N(mean0, cov0) || N(mean1, cov1)) =
//   1/2 (log(det cov1 / det cov0) - k + tr(cov1^-1 cov0)
//        + (mean1 - mean0)^T cov1^-1 (mean1 - mean0)).
//
// Both covariances are Cholesky-factored; log-determinants come from the
// factor diagonals and the trace and Mahalanobis terms from triangular solves,
// so no explicit inverse is formed. Throws DomainError when either covariance
// is not symmetric positive definite or the dimensions disagree. The result is
// clamped at zero against rounding.
double kl_divergence(const Eigen::Ref<const Eigen::VectorXd>& mean0,
                     const Eigen::Ref<const Eigen::MatrixXd>& cov0,
                     const Eigen::Ref<const Eigen::VectorXd>& mean1,
                     const Eigen::Ref<const Eigen::MatrixXd>& cov1);

// Covariance-only variant (equal means).
double kl_divergence(const Eigen::Ref<const Eigen::MatrixXd>& cov0,
                     const Eigen::Ref<const Eigen::MatrixXd>& cov1);

}  // namespace cpsim
