#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tworeg/covariance.hpp"
#include "tworeg/rng.hpp"
#include "tworeg/types.hpp"

namespace tworeg {

enum class StudyKind { Autocorrelation, RandomEffectAligned, RandomEffectUnaligned };

const char* to_string(StudyKind study);

/// Synthetic data-generating process. Covariates have unit marginal
/// variance; the first one follows AR(pi). Noise is AR(rho) with marginal
/// variance sigma2 * p. Random-effect studies add X_i1 * b_i (aligned) or
/// Z_i * b_i (unaligned) with b following AR(tau), Var(b_1) = effect_var.
struct DgpConfig {
    Eigen::Index n = 2000;
    Eigen::Index p = 10;
    double pi = 0.0;
    double rho = 0.0;
    double tau = 0.0;
    double sigma2 = 1.0;
    double effect_var = 0.0;
    StudyKind study = StudyKind::Autocorrelation;
    std::uint64_t seed = 0;

    void validate() const;
};

struct GeneratedData {
    Dataset data;
    Eigen::VectorXd true_beta;
    /// Conditional covariance of the OLS estimator given the design,
    /// computed from the known noise covariance of the generating process.
    std::optional<CovarianceMatrix> true_cov;
};

/// Stationary Gaussian AR(1) with exact covariance
/// marginal_var * coeff^|i-j| at all lags (no burn-in).
Eigen::VectorXd gen_ar1(Eigen::Index length, double coeff, double marginal_var, Rng& rng);

GeneratedData gen_dataset(const DgpConfig& cfg);

/// As gen_dataset but with the coefficient vector pinned instead of drawn.
GeneratedData gen_dataset_with_beta(const DgpConfig& cfg, const Eigen::VectorXd& beta);

/// Closed-form limit of n * Var(beta_hat) for the study's per-covariate
/// univariate setting. Gaussian covariates have fourth moment 3; pass an
/// override for other designs.
double analytic_limit(const DgpConfig& cfg, double fourth_moment = 3.0);

struct NvarEstimate {
    Eigen::Index n = 0;
    double value = 0.0;
    double std_error = 0.0;
};

/// Monte Carlo estimate of n * Var(beta_hat) for each requested n (p must
/// be 1); the brute-force oracle against analytic_limit.
std::vector<NvarEstimate> empirical_nvar(const DgpConfig& cfg,
                                         const std::vector<Eigen::Index>& n_list, int replicates,
                                         int workers = 1);

enum class StudyMethod { OLS, StandardRidge, TworegRidge, CorrectTworegRidge };

const char* to_string(StudyMethod method);

struct StudyResult {
    StudyMethod method = StudyMethod::OLS;
    double lambda = 0.0;
    double kappa = 0.0;
    double mu = 0.0;
    double mean_sq_error = 0.0;
    double std_error = 0.0;
    double mean_beta1_sq = 0.0;
    double beta1_sq_std_error = 0.0;
    double mean_beta_sq_total = 0.0;
    int replicates = 0;
};

/// Per replicate: generate data, fit every method at every lambda (tworeg
/// ridge runs bootstrap -> shrink -> normalize per grid point; the correctly
/// specified arm uses the true covariance), and record squared estimation
/// error and beta_1^2. Aggregation is a fixed-order reduction, so results
/// are identical for any worker count.
std::vector<StudyResult> run_study(const DgpConfig& cfg, const std::vector<StudyMethod>& methods,
                                   const std::vector<double>& lambda_grid,
                                   const std::vector<ShrinkageParams>& shrink_grid,
                                   int replicates, const BootstrapConfig& bootstrap,
                                   int workers = 1);

}  // namespace tworeg
