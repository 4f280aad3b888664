#pragma once

#include "tworeg/types.hpp"

namespace tworeg {

/// Ordinary least squares: the unique minimizer of ||y - X b||^2.
Coefficients ols_fit(const Dataset& data);

/// Standard ridge: solves (X^T X + lambda I) b = X^T y.
Coefficients ridge_fit(const Dataset& data, double lambda);

/// Ridge with covariance-adjusted penalty: solves
/// (X^T X + lambda X^T X C) b = X^T y. With C proportional to (X^T X)^{-1}
/// this degenerates back into standard ridge.
Coefficients tworeg_ridge_fit(const Dataset& data, const CovarianceMatrix& cov, double lambda);

/// Builds p x p pseudo-data via Cholesky so that
/// design^T design = C^{-1} and design^T response = C^{-1} beta_hat.
PseudoData cholesky_pseudo_data(const Coefficients& beta_hat, const CovarianceMatrix& cov);

/// Posterior mode of beta_hat | beta ~ N(beta, C) against the ridge prior:
/// (C^{-1} + lambda I)^{-1} C^{-1} beta_hat. Agrees with tworeg_ridge_fit
/// when beta_hat came from ols_fit on the same data.
Coefficients normal_tworeg_fit(const Coefficients& beta_hat, const CovarianceMatrix& cov,
                               const GaussianPrior& prior);

/// Exact finite-lambda covariance of the generalized ridge estimator
/// b_lambda = (X^T X + lambda X^T X Penalty)^{-1} X^T y, namely
/// (I + lambda*Penalty)^{-1} C (I + lambda*Penalty^T)^{-1}.
CovarianceMatrix ridge_estimator_covariance(const Eigen::MatrixXd& design,
                                            const CovarianceMatrix& penalty,
                                            const CovarianceMatrix& ols_cov, double lambda);

/// True iff Penalty^T C^{-1} + C^{-1} Penalty is positive definite, the
/// necessary and sufficient condition for Cov(b_lambda) to be monotone
/// decreasing in lambda in the positive definite order.
bool monotonicity_criterion(const CovarianceMatrix& penalty, const CovarianceMatrix& ols_cov);

}  // namespace tworeg
