#include "tworeg/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tworeg/linalg.hpp"
#include "tworeg/parallel.hpp"
#include "tworeg/rng.hpp"

namespace tworeg {

namespace {

std::vector<FoldPlan::Range> partition_ranges(Eigen::Index n, int k) {
    std::vector<FoldPlan::Range> ranges;
    ranges.reserve(static_cast<std::size_t>(k));
    const Eigen::Index base = n / k;
    const Eigen::Index extra = n % k;
    Eigen::Index start = 0;
    for (int i = 0; i < k; ++i) {
        const Eigen::Index len = base + (i < extra ? 1 : 0);
        ranges.emplace_back(start, start + len);
        start += len;
    }
    return ranges;
}

struct BlockGrams {
    std::vector<Eigen::MatrixXd> gram;   // X_k^T X_k per block
    std::vector<Eigen::VectorXd> score;  // X_k^T y_k per block
};

BlockGrams block_grams(const Dataset& data, const std::vector<FoldPlan::Range>& ranges) {
    BlockGrams out;
    out.gram.reserve(ranges.size());
    out.score.reserve(ranges.size());
    for (const auto& [start, end] : ranges) {
        const auto x = data.design().middleRows(start, end - start);
        const auto y = data.response().segment(start, end - start);
        out.gram.push_back(x.transpose() * x);
        out.score.push_back(x.transpose() * y);
    }
    return out;
}

}  // namespace

void BootstrapConfig::validate(Eigen::Index n) const {
    if (iterations < 2) {
        throw Error(ErrorCode::InvalidConfig, "bootstrap needs at least 2 iterations");
    }
    if (blocks < 1 || blocks > n) {
        throw Error(ErrorCode::InvalidConfig, "block count must lie in [1, n]");
    }
}

FoldPlan::FoldPlan(std::vector<Range> boundaries) : boundaries_(std::move(boundaries)) {
    if (boundaries_.empty()) {
        throw Error(ErrorCode::InvalidConfig, "fold plan must contain at least one range");
    }
    Eigen::Index expected = 0;
    Eigen::Index min_len = boundaries_[0].second - boundaries_[0].first;
    Eigen::Index max_len = min_len;
    for (const auto& [start, end] : boundaries_) {
        if (start != expected || end <= start) {
            throw Error(ErrorCode::InvalidConfig,
                        "fold ranges must be contiguous, non-overlapping and cover [0, n)");
        }
        min_len = std::min(min_len, end - start);
        max_len = std::max(max_len, end - start);
        expected = end;
    }
    if (max_len - min_len > 1) {
        throw Error(ErrorCode::InvalidConfig, "fold sizes may differ by at most one");
    }
}

FoldPlan FoldPlan::contiguous(Eigen::Index n, int folds) {
    if (folds < 1 || folds > n) {
        throw Error(ErrorCode::InvalidConfig, "fold count must lie in [1, n]");
    }
    return FoldPlan(partition_ranges(n, folds));
}

CovarianceMatrix block_bootstrap_cov(const Dataset& data, const BootstrapConfig& cfg,
                                     int workers) {
    cfg.validate(data.n());
    const int num_blocks = cfg.blocks;
    const auto ranges = partition_ranges(data.n(), num_blocks);
    const BlockGrams blocks = block_grams(data, ranges);
    const Eigen::Index p = data.p();
    const std::size_t b_total = static_cast<std::size_t>(cfg.iterations);

    std::vector<Eigen::VectorXd> betas(b_total);
    std::vector<std::uint32_t> redraws(b_total, 0);
    const std::uint64_t attempt_cap = 10ULL * b_total;

    parallel_for(b_total, workers, [&](std::size_t b) {
        Rng rng = Rng(cfg.seed).fork(b);
        Eigen::MatrixXd gram(p, p);
        Eigen::VectorXd score(p);
        std::uint64_t attempts = 0;
        for (;;) {
            gram.setZero();
            score.setZero();
            for (int i = 0; i < num_blocks; ++i) {
                const auto k = rng.next_index(static_cast<std::uint64_t>(num_blocks));
                gram += blocks.gram[k];
                score += blocks.score[k];
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
            if (gram_full_rank(eig)) {
                betas[b] = eig_solve(eig, score);
                return;
            }
            ++redraws[b];
            if (++attempts > attempt_cap) return;  // flagged by empty betas[b]
        }
    });

    std::uint64_t total_redraws = 0;
    for (std::size_t b = 0; b < b_total; ++b) {
        total_redraws += redraws[b];
        if (betas[b].size() == 0) total_redraws = attempt_cap + 1;
    }
    if (total_redraws > attempt_cap) {
        throw Error(ErrorCode::BootstrapDegenerate,
                    "resampled designs kept losing rank (redraw budget 10*B exhausted)");
    }

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
    for (const auto& beta : betas) mean += beta;
    mean /= static_cast<double>(b_total);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
    for (const auto& beta : betas) {
        const Eigen::VectorXd centered = beta - mean;
        cov.noalias() += centered * centered.transpose();
    }
    cov /= static_cast<double>(b_total - 1);
    return CovarianceMatrix(std::move(cov), CovStage::Crude);
}

CovarianceMatrix cv_hac_cov(const Dataset& data, const FoldPlan& folds) {
    if (folds.n() != data.n()) {
        throw Error(ErrorCode::DimensionMismatch, "fold plan does not cover the dataset");
    }
    const Eigen::Index p = data.p();
    const Eigen::MatrixXd gram = data.design().transpose() * data.design();
    const Eigen::VectorXd score = data.design().transpose() * data.response();

    Eigen::MatrixXd middle = Eigen::MatrixXd::Zero(p, p);
    int index = 0;
    for (const auto& [start, end] : folds.boundaries()) {
        const auto x = data.design().middleRows(start, end - start);
        const auto y = data.response().segment(start, end - start);
        const Eigen::MatrixXd gram_out = gram - x.transpose() * x;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram_out);
        if (!gram_full_rank(eig)) {
            throw Error(ErrorCode::RankDeficient,
                        "leave-out design rank deficient at fold " + std::to_string(index));
        }
        const Eigen::VectorXd beta = eig_solve(eig, score - x.transpose() * y);
        const Eigen::VectorXd v = x.transpose() * (y - x * beta);
        middle.noalias() += v * v.transpose();
        ++index;
    }
    const Eigen::MatrixXd gram_inv = spd_inverse(gram, ErrorCode::RankDeficient);
    return CovarianceMatrix(gram_inv * middle * gram_inv, CovStage::Crude);
}

CovarianceMatrix prior_cov(const Eigen::MatrixXd& design, const CovarianceMatrix& crude) {
    if (design.cols() != crude.p()) {
        throw Error(ErrorCode::DimensionMismatch, "design and crude covariance must agree on p");
    }
    const double crude_trace = crude.trace();
    if (!(crude_trace > 0.0)) {
        throw Error(ErrorCode::DegeneratePrior, "crude covariance has nonpositive trace");
    }
    const Eigen::MatrixXd gram_inv =
        spd_inverse(design.transpose() * design, ErrorCode::RankDeficient);
    return CovarianceMatrix(gram_inv * (crude_trace / gram_inv.trace()), CovStage::Prior);
}

CovarianceMatrix pca_project(const CovarianceMatrix& crude, const CovarianceMatrix& prior) {
    if (crude.p() != prior.p()) {
        throw Error(ErrorCode::DimensionMismatch, "crude and prior must agree on p");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(prior.entries());
    const Eigen::MatrixXd& u = eig.eigenvectors();
    const Eigen::VectorXd diag = (u.transpose() * crude.entries() * u).diagonal();
    return CovarianceMatrix(u * diag.asDiagonal() * u.transpose(), crude.stage());
}

CovarianceMatrix shrink(const CovarianceMatrix& crude, const CovarianceMatrix& prior,
                        const ShrinkageParams& params) {
    if (crude.p() != prior.p()) {
        throw Error(ErrorCode::DimensionMismatch, "crude and prior must agree on p");
    }
    if (params.kappa == 1.0) return CovarianceMatrix(prior.entries(), CovStage::Shrunk);
    if (params.kappa == 0.0 && params.mu == 0.0) {
        return CovarianceMatrix(crude.entries(), CovStage::Shrunk);
    }
    Eigen::MatrixXd body;
    if (params.mu > 0.0) {
        body = (1.0 - params.mu) * crude.entries() +
               params.mu * pca_project(crude, prior).entries();
    } else {
        body = crude.entries();
    }
    return CovarianceMatrix((1.0 - params.kappa) * body + params.kappa * prior.entries(),
                            CovStage::Shrunk);
}

bool verify_prop41(const CovarianceMatrix& crude, const CovarianceMatrix& prior, double kappa) {
    if (!(kappa >= 0.0 && kappa < 1.0)) {
        throw Error(ErrorCode::InvalidShrinkage, "kappa must lie in [0, 1)");
    }
    const double lambda = kappa / (1.0 - kappa);
    // The ridge-type objective is separable, so each entry is minimized by
    // its own scalar quadratic: G_ij = (C_ij + lambda * Pi_ij) / (1 + lambda).
    const Eigen::MatrixXd minimizer =
        (crude.entries() + lambda * prior.entries()) / (1.0 + lambda);
    const Eigen::MatrixXd combination =
        (1.0 - kappa) * crude.entries() + kappa * prior.entries();
    const double scale = std::max(combination.norm(), minimizer.norm());
    if (scale == 0.0) return true;
    return (minimizer - combination).norm() <= 1e-6 * scale;
}

CovarianceMatrix normalize(const CovarianceMatrix& shrunk, const Eigen::MatrixXd& design) {
    if (design.cols() != shrunk.p()) {
        throw Error(ErrorCode::DimensionMismatch, "design and covariance must agree on p");
    }
    const Eigen::MatrixXd gram = design.transpose() * design;
    const double denom = (gram * shrunk.entries()).trace();
    if (!(denom > 0.0)) {
        throw Error(ErrorCode::DegenerateNormalization, "tr(X^T X * C) must be positive");
    }
    const double scale = static_cast<double>(shrunk.p()) / denom;
    return CovarianceMatrix(shrunk.entries() * scale, CovStage::Normalized);
}

double gaussian_kl_sym(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const Eigen::Index p = a.rows();
    const double cross = solve_spd(b, a).trace() + solve_spd(a, b).trace();
    return 0.5 * cross - static_cast<double>(p);
}

std::vector<ShrinkageParams> default_shrink_grid() {
    std::vector<ShrinkageParams> grid;
    for (int ik = 0; ik <= 5; ++ik) {
        for (int im = 0; im <= 5; ++im) {
            grid.emplace_back(0.2 * ik, 0.2 * im);
        }
    }
    return grid;
}

ShrinkageParams select_shrinkage(const Dataset& data, const FoldPlan& folds,
                                 const std::vector<ShrinkageParams>& grid,
                                 const BootstrapConfig& cfg, CovMetric metric) {
    const CrudeEstimator bootstrap_family = [&cfg](const Dataset& subset, int blocks,
                                                   std::uint64_t seed) {
        BootstrapConfig sub = cfg;
        sub.blocks = static_cast<int>(std::min<Eigen::Index>(blocks, subset.n()));
        sub.seed = seed;
        return block_bootstrap_cov(subset, sub);
    };
    return select_shrinkage_with(data, folds, grid, cfg, metric, bootstrap_family);
}

ShrinkageParams select_shrinkage_with(const Dataset& data, const FoldPlan& folds,
                                      const std::vector<ShrinkageParams>& grid,
                                      const BootstrapConfig& cfg, CovMetric metric,
                                      const CrudeEstimator& estimator) {
    if (grid.empty()) {
        throw Error(ErrorCode::InvalidConfig, "shrinkage grid must be nonempty");
    }
    if (folds.count() < 2) {
        throw Error(ErrorCode::InvalidConfig, "selection needs at least 2 folds");
    }
    if (folds.n() != data.n()) {
        throw Error(ErrorCode::DimensionMismatch, "fold plan does not cover the dataset");
    }

    std::vector<double> scores(grid.size(), 0.0);
    int fold_index = 0;
    for (const auto& [start, end] : folds.boundaries()) {
        try {
            const Dataset in_data = data.excluding_rows(start, end);
            const Dataset out_data = data.rows(start, end);
            const int in_blocks = static_cast<int>(folds.count()) - 1;
            const CovarianceMatrix crude =
                estimator(in_data, in_blocks, Rng::derive2(cfg.seed, 0x1, fold_index));
            const CovarianceMatrix prior = prior_cov(in_data.design(), crude);
            const CovarianceMatrix crude_out =
                estimator(out_data, cfg.blocks, Rng::derive2(cfg.seed, 0x2, fold_index));

            // Covariances scale like 1/n, so both sides are put on the same
            // footing by multiplying with their own sample sizes.
            const double scale_in = static_cast<double>(in_data.n());
            const Eigen::MatrixXd target =
                static_cast<double>(out_data.n()) * crude_out.entries();
            for (std::size_t g = 0; g < grid.size(); ++g) {
                const Eigen::MatrixXd candidate =
                    scale_in * shrink(crude, prior, grid[g]).entries();
                if (metric == CovMetric::Frobenius) {
                    scores[g] += (candidate - target).norm();
                } else {
                    scores[g] += gaussian_kl_sym(candidate, target);
                }
            }
        } catch (const Error& err) {
            throw Error(ErrorCode::SelectionFoldFailure,
                        "fold " + std::to_string(fold_index) + " failed: " + err.what());
        }
        ++fold_index;
    }

    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g) {
        const bool better = scores[g] < scores[best];
        const bool tie = scores[g] == scores[best] &&
                         (grid[g].kappa < grid[best].kappa ||
                          (grid[g].kappa == grid[best].kappa && grid[g].mu < grid[best].mu));
        if (better || tie) best = g;
    }
    return grid[best];
}

}  // namespace tworeg
