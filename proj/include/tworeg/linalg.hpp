#pragma once

#include <Eigen/Dense>

#include "tworeg/errors.hpp"

namespace tworeg {

/// Relative tolerance for rank decisions: singular values below
/// `kRankTol * sigma_max` count as zero.
inline constexpr double kRankTol = 1e-10;

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a) {
    return 0.5 * (a + a.transpose());
}

/// Solve A X = B for symmetric positive definite A via Cholesky. If the
/// factorization fails, jitter 1e-12*trace/p is added to the diagonal once;
/// a second failure throws `fail_code`.
inline Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                 ErrorCode fail_code = ErrorCode::SingularCovariance) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) return llt.solve(b);
    const double jitter = 1e-12 * a.trace() / static_cast<double>(a.rows());
    Eigen::MatrixXd aj = a;
    aj.diagonal().array() += jitter;
    llt.compute(aj);
    if (llt.info() == Eigen::Success) return llt.solve(b);
    throw Error(fail_code, "symmetric positive definite factorization failed even after jitter");
}

inline Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a,
                                   ErrorCode fail_code = ErrorCode::SingularCovariance) {
    return solve_spd(a, Eigen::MatrixXd::Identity(a.rows(), a.cols()), fail_code);
}

/// Throws RankDeficient unless all singular values exceed kRankTol * sigma_max.
inline void require_full_column_rank(const Eigen::MatrixXd& x) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(sv.size() - 1) <= kRankTol * sv(0)) {
        throw Error(ErrorCode::RankDeficient,
                    "design is rank deficient (singular value below relative tolerance 1e-10)");
    }
}

/// Rank check on a Gram matrix G = X^T X: eigenvalues relate to squared
/// singular values of X, so the threshold is kRankTol^2 * lambda_max.
inline bool gram_full_rank(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& eig) {
    const auto& ev = eig.eigenvalues();
    return ev(0) > kRankTol * kRankTol * ev(ev.size() - 1) && ev(ev.size() - 1) > 0.0;
}

/// Solve G b = h through an already-computed eigendecomposition of G.
inline Eigen::VectorXd eig_solve(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& eig,
                                 const Eigen::VectorXd& h) {
    return eig.eigenvectors() *
           (eig.eigenvalues().array().inverse() *
            (eig.eigenvectors().transpose() * h).array())
               .matrix();
}

}  // namespace tworeg
