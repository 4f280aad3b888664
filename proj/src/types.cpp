#include "tworeg/types.hpp"

#include "tworeg/linalg.hpp"

namespace tworeg {

const char* to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::OLS: return "ols";
        case EstimatorKind::StandardRidge: return "standard_ridge";
        case EstimatorKind::TworegRidge: return "tworeg_ridge";
        case EstimatorKind::NormalTworeg: return "normal_tworeg";
    }
    return "unknown";
}

const char* to_string(CovStage stage) {
    switch (stage) {
        case CovStage::Crude: return "crude";
        case CovStage::Shrunk: return "shrunk";
        case CovStage::Normalized: return "normalized";
        case CovStage::Prior: return "prior";
        case CovStage::TrueKnown: return "true_known";
    }
    return "unknown";
}

Dataset::Dataset(Eigen::MatrixXd design, Eigen::VectorXd response)
    : design_(std::move(design)), response_(std::move(response)) {
    if (design_.cols() < 1 || design_.rows() < design_.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "need n >= p >= 1");
    }
    if (response_.size() != design_.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "response length must equal design row count");
    }
    require_full_column_rank(design_);
}

Dataset Dataset::rows(Eigen::Index start, Eigen::Index end) const {
    if (start < 0 || end > n() || start >= end) {
        throw Error(ErrorCode::DimensionMismatch, "invalid row range");
    }
    return Dataset(design_.middleRows(start, end - start), response_.segment(start, end - start));
}

Dataset Dataset::excluding_rows(Eigen::Index start, Eigen::Index end) const {
    if (start < 0 || end > n() || start >= end) {
        throw Error(ErrorCode::DimensionMismatch, "invalid row range");
    }
    const Eigen::Index kept = n() - (end - start);
    Eigen::MatrixXd x(kept, p());
    Eigen::VectorXd y(kept);
    x.topRows(start) = design_.topRows(start);
    y.head(start) = response_.head(start);
    x.bottomRows(kept - start) = design_.bottomRows(n() - end);
    y.tail(kept - start) = response_.tail(n() - end);
    return Dataset(std::move(x), std::move(y));
}

CovarianceMatrix::CovarianceMatrix(Eigen::MatrixXd entries, CovStage stage)
    : entries_(std::move(entries)), stage_(stage) {
    if (entries_.rows() != entries_.cols() || entries_.rows() < 1) {
        throw Error(ErrorCode::DimensionMismatch, "covariance matrix must be square");
    }
    const double scale = entries_.cwiseAbs().maxCoeff();
    if (scale > 0.0) {
        const double asym = (entries_ - entries_.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-8 * scale) {
            throw Error(ErrorCode::NotSymmetric,
                        "input asymmetry exceeds relative tolerance 1e-8");
        }
    }
    entries_ = symmetrized(entries_);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(entries_);
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double floor = -1e-10 * std::max(entries_.trace(), 0.0);
    if (ev(0) < floor) {
        throw Error(ErrorCode::NotPositiveSemidefinite,
                    "smallest eigenvalue below -1e-10 * trace");
    }
    if (ev(0) < 0.0) {
        Eigen::VectorXd clamped = ev.cwiseMax(0.0);
        entries_ = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
        entries_ = symmetrized(entries_);
    }
}

}  // namespace tworeg
