#include "tworeg/estimators.hpp"

#include <cassert>
#include <cmath>

#include "tworeg/linalg.hpp"

namespace tworeg {

namespace {

Eigen::VectorXd normal_equations_solve(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs) {
    return solve_spd(gram, rhs, ErrorCode::RankDeficient);
}

}  // namespace

Coefficients ols_fit(const Dataset& data) {
    const Eigen::MatrixXd gram = data.design().transpose() * data.design();
    const Eigen::VectorXd rhs = data.design().transpose() * data.response();
    return Coefficients{normal_equations_solve(gram, rhs), EstimatorKind::OLS, 0.0};
}

Coefficients ridge_fit(const Dataset& data, double lambda) {
    if (!(lambda >= 0.0)) {
        throw Error(ErrorCode::InvalidPenalty, "ridge penalty must be nonnegative");
    }
    Eigen::MatrixXd gram = data.design().transpose() * data.design();
    gram.diagonal().array() += lambda;
    const Eigen::VectorXd rhs = data.design().transpose() * data.response();
    return Coefficients{normal_equations_solve(gram, rhs), EstimatorKind::StandardRidge, lambda};
}

Coefficients tworeg_ridge_fit(const Dataset& data, const CovarianceMatrix& cov, double lambda) {
    if (!(lambda >= 0.0)) {
        throw Error(ErrorCode::InvalidPenalty, "ridge penalty must be nonnegative");
    }
    if (cov.p() != data.p()) {
        throw Error(ErrorCode::DimensionMismatch, "covariance dimension must match covariates");
    }
    const Eigen::MatrixXd gram = data.design().transpose() * data.design();
    const Eigen::VectorXd rhs = data.design().transpose() * data.response();

    // Solve (X^T X + lambda X^T X C) b = X^T y directly; the system is not
    // symmetric in general.
    const Eigen::MatrixXd system = gram + lambda * (gram * cov.entries());
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    const Eigen::VectorXd beta = lu.solve(rhs);
    if (!beta.allFinite()) {
        throw Error(ErrorCode::SingularPenaltySystem, "penalized normal equations are singular");
    }

#ifndef NDEBUG
    // Factored form (I + lambda C)^{-1} beta_ols must agree.
    {
        const Eigen::VectorXd beta_ols = normal_equations_solve(gram, rhs);
        Eigen::MatrixXd factor = Eigen::MatrixXd::Identity(data.p(), data.p());
        factor += lambda * cov.entries();
        const Eigen::VectorXd alt = Eigen::PartialPivLU<Eigen::MatrixXd>(factor).solve(beta_ols);
        const double scale = std::max(beta.norm(), 1e-300);
        assert((beta - alt).norm() <= 1e-8 * scale);
    }
#endif

    return Coefficients{beta, EstimatorKind::TworegRidge, lambda};
}

PseudoData cholesky_pseudo_data(const Coefficients& beta_hat, const CovarianceMatrix& cov) {
    if (cov.p() != beta_hat.values.size()) {
        throw Error(ErrorCode::DimensionMismatch, "covariance dimension must match coefficients");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov.entries());
    if (llt.info() != Eigen::Success) {
        const double jitter = 1e-12 * cov.trace() / static_cast<double>(cov.p());
        Eigen::MatrixXd jittered = cov.entries();
        jittered.diagonal().array() += jitter;
        llt.compute(jittered);
        if (llt.info() != Eigen::Success) {
            throw Error(ErrorCode::SingularCovariance, "covariance is singular");
        }
    }
    // C = L L^T, so design = L^{-1} gives design^T design = C^{-1} and
    // response = L^{-1} beta_hat gives design^T response = C^{-1} beta_hat.
    const Eigen::MatrixXd l = llt.matrixL();
    PseudoData out;
    out.design_tilde =
        l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(cov.p(), cov.p()));
    out.response_tilde = l.triangularView<Eigen::Lower>().solve(beta_hat.values);
    return out;
}

Coefficients normal_tworeg_fit(const Coefficients& beta_hat, const CovarianceMatrix& cov,
                               const GaussianPrior& prior) {
    if (cov.p() != beta_hat.values.size()) {
        throw Error(ErrorCode::DimensionMismatch, "covariance dimension must match coefficients");
    }
    if (prior.lambda == 0.0) {
        return Coefficients{beta_hat.values, EstimatorKind::NormalTworeg, 0.0};
    }
    const Eigen::MatrixXd cov_inv = spd_inverse(cov.entries(), ErrorCode::SingularCovariance);
    Eigen::MatrixXd system = cov_inv;
    system.diagonal().array() += prior.lambda;
    const Eigen::VectorXd beta =
        solve_spd(symmetrized(system), cov_inv * beta_hat.values, ErrorCode::SingularCovariance);
    return Coefficients{beta, EstimatorKind::NormalTworeg, prior.lambda};
}

CovarianceMatrix ridge_estimator_covariance(const Eigen::MatrixXd& design,
                                            const CovarianceMatrix& penalty,
                                            const CovarianceMatrix& ols_cov, double lambda) {
    const Eigen::Index p = ols_cov.p();
    if (penalty.p() != p || design.cols() != p) {
        throw Error(ErrorCode::DimensionMismatch, "penalty, covariance and design must agree on p");
    }
    Eigen::MatrixXd shrinker = Eigen::MatrixXd::Identity(p, p) + lambda * penalty.entries();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(shrinker);
    const Eigen::MatrixXd half = lu.solve(ols_cov.entries());
    const Eigen::MatrixXd result = lu.solve(half.transpose()).transpose();
    if (!result.allFinite()) {
        throw Error(ErrorCode::SingularPenaltySystem, "I + lambda * penalty is singular");
    }
    return CovarianceMatrix(symmetrized(result), CovStage::TrueKnown);
}

bool monotonicity_criterion(const CovarianceMatrix& penalty, const CovarianceMatrix& ols_cov) {
    if (penalty.p() != ols_cov.p()) {
        throw Error(ErrorCode::DimensionMismatch, "penalty and covariance must agree on p");
    }
    const Eigen::MatrixXd cov_inv = spd_inverse(ols_cov.entries(), ErrorCode::SingularCovariance);
    const Eigen::MatrixXd criterion = symmetrized(penalty.entries().transpose() * cov_inv +
                                                  cov_inv * penalty.entries());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(criterion, Eigen::EigenvaluesOnly);
    return eig.eigenvalues()(0) > 1e-10 * std::abs(criterion.trace());
}

}  // namespace tworeg
