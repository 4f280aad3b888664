#pragma once

#include <Eigen/Dense>
#include <string>

#include "tworeg/errors.hpp"

namespace tworeg {

enum class EstimatorKind { OLS, StandardRidge, TworegRidge, NormalTworeg };

enum class CovStage { Crude, Shrunk, Normalized, Prior, TrueKnown };

const char* to_string(EstimatorKind kind);
const char* to_string(CovStage stage);

/// A design matrix plus aligned response. Construction validates
/// n >= p >= 1, matching lengths, and full column rank (relative singular
/// value tolerance 1e-10).
class Dataset {
public:
    Dataset(Eigen::MatrixXd design, Eigen::VectorXd response);

    Eigen::Index n() const { return design_.rows(); }
    Eigen::Index p() const { return design_.cols(); }
    const Eigen::MatrixXd& design() const { return design_; }
    const Eigen::VectorXd& response() const { return response_; }

    /// Rows [start, end) as a new (re-validated) Dataset.
    Dataset rows(Eigen::Index start, Eigen::Index end) const;

    /// All rows except [start, end).
    Dataset excluding_rows(Eigen::Index start, Eigen::Index end) const;

private:
    Eigen::MatrixXd design_;
    Eigen::VectorXd response_;
};

/// Fitted parameter vector with provenance.
struct Coefficients {
    Eigen::VectorXd values;
    EstimatorKind estimator_kind = EstimatorKind::OLS;
    double lambda = 0.0;
};

/// Symmetric PSD matrix with a pipeline-stage tag. Construction symmetrizes
/// (asymmetry beyond 1e-8 relative is an error), then clamps eigenvalues in
/// [-1e-10*trace, 0) to zero; anything more negative throws
/// NotPositiveSemidefinite. The clamp tolerates floating-point noise from
/// bootstrap sample covariances without masking real indefiniteness.
class CovarianceMatrix {
public:
    CovarianceMatrix(Eigen::MatrixXd entries, CovStage stage);

    Eigen::Index p() const { return entries_.rows(); }
    const Eigen::MatrixXd& entries() const { return entries_; }
    CovStage stage() const { return stage_; }
    double trace() const { return entries_.trace(); }

private:
    Eigen::MatrixXd entries_;
    CovStage stage_;
};

/// Synthetic regression data whose normal equations reproduce a given
/// (coefficients, covariance) pair: design^T design = C^{-1} and
/// design^T response = C^{-1} beta_hat.
struct PseudoData {
    Eigen::MatrixXd design_tilde;
    Eigen::VectorXd response_tilde;
};

/// Mean-zero Gaussian prior with precision matrix lambda * I (the ridge
/// prior). Other priors are out of scope.
struct GaussianPrior {
    double lambda = 0.0;

    explicit GaussianPrior(double lambda_) : lambda(lambda_) {
        if (!(lambda >= 0.0)) {
            throw Error(ErrorCode::InvalidPenalty, "prior precision must be nonnegative");
        }
    }
};

}  // namespace tworeg
