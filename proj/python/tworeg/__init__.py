"""Two-stage regularization of least-squares estimators.

The heavy lifting lives in the compiled extension; this package re-exports
its public surface.
"""

from tworeg._core import (  # noqa: F401
    BootstrapConfig,
    Coefficients,
    CovarianceMatrix,
    CovMetric,
    CovStage,
    Dataset,
    DgpConfig,
    EstimatorKind,
    FoldPlan,
    GaussianPrior,
    GeneratedData,
    NvarEstimate,
    PseudoData,
    ShrinkageParams,
    StudyKind,
    StudyMethod,
    StudyResult,
    TworegError,
    analytic_limit,
    block_bootstrap_cov,
    cholesky_pseudo_data,
    cv_hac_cov,
    default_shrink_grid,
    empirical_nvar,
    gen_dataset,
    monotonicity_criterion,
    normal_tworeg_fit,
    normalize,
    ols_fit,
    pca_project,
    prior_cov,
    ridge_estimator_covariance,
    ridge_fit,
    run_study,
    select_shrinkage,
    shrink,
    tworeg_ridge_fit,
    verify_prop41,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
