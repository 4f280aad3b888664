#include "tworeg/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "tworeg/estimators.hpp"
#include "tworeg/linalg.hpp"
#include "tworeg/parallel.hpp"

namespace tworeg {

const char* to_string(StudyKind study) {
    switch (study) {
        case StudyKind::Autocorrelation: return "autocorrelation";
        case StudyKind::RandomEffectAligned: return "random_effect_aligned";
        case StudyKind::RandomEffectUnaligned: return "random_effect_unaligned";
    }
    return "unknown";
}

const char* to_string(StudyMethod method) {
    switch (method) {
        case StudyMethod::OLS: return "ols";
        case StudyMethod::StandardRidge: return "standard_ridge";
        case StudyMethod::TworegRidge: return "tworeg_ridge";
        case StudyMethod::CorrectTworegRidge: return "correct_tworeg_ridge";
    }
    return "unknown";
}

void DgpConfig::validate() const {
    if (!(pi >= 0.0 && pi < 1.0 && rho >= 0.0 && rho < 1.0 && tau >= 0.0 && tau < 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "pi, rho, tau must lie in [0, 1)");
    }
    if (!(sigma2 > 0.0)) throw Error(ErrorCode::InvalidConfig, "sigma2 must be positive");
    if (!(effect_var >= 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "effect variance must be nonnegative");
    }
    if (n < p || p < 1) throw Error(ErrorCode::InvalidConfig, "need n >= p >= 1");
}

Eigen::VectorXd gen_ar1(Eigen::Index length, double coeff, double marginal_var, Rng& rng) {
    if (!(coeff >= 0.0 && coeff < 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "AR coefficient must lie in [0, 1)");
    }
    const double sd = std::sqrt(marginal_var);
    Eigen::VectorXd x(length);
    if (length == 0) return x;
    x(0) = sd * rng.next_gaussian();
    const double innovation_sd = sd * std::sqrt(1.0 - coeff * coeff);
    for (Eigen::Index i = 1; i < length; ++i) {
        x(i) = coeff * x(i - 1) + innovation_sd * rng.next_gaussian();
    }
    return x;
}

namespace {

/// sum_{i,j} a^|i-j| v_i v_j^T over the rows v_i of `rows`, in O(n p^2) via
/// the running prefix s_i = sum_{j<i} a^{i-j} v_j.
Eigen::MatrixXd toeplitz_quad(const Eigen::MatrixXd& rows, double a) {
    const Eigen::Index p = rows.cols();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const Eigen::VectorXd v = rows.row(i).transpose();
        m.noalias() += v * v.transpose();
        if (a != 0.0) {
            if (i > 0) s = a * (s + rows.row(i - 1).transpose());
            m.noalias() += v * s.transpose() + s * v.transpose();
        }
    }
    return m;
}

GeneratedData generate(const DgpConfig& cfg, const Eigen::VectorXd* beta_override) {
    cfg.validate();
    const Eigen::Index n = cfg.n;
    const Eigen::Index p = cfg.p;
    Rng root(cfg.seed);

    Eigen::MatrixXd x(n, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        Rng col_rng = root.fork(static_cast<std::uint64_t>(j));
        x.col(j) = gen_ar1(n, j == 0 ? cfg.pi : 0.0, 1.0, col_rng);
    }

    Eigen::VectorXd beta(p);
    if (beta_override) {
        if (beta_override->size() != p) {
            throw Error(ErrorCode::DimensionMismatch, "beta override length must equal p");
        }
        beta = *beta_override;
    } else {
        Rng beta_rng = root.fork(static_cast<std::uint64_t>(p));
        for (Eigen::Index j = 0; j < p; ++j) beta(j) = beta_rng.next_gaussian();
    }

    const double noise_var = cfg.sigma2 * static_cast<double>(p);
    Rng eps_rng = root.fork(static_cast<std::uint64_t>(p) + 1);
    Eigen::VectorXd noise = gen_ar1(n, cfg.rho, noise_var, eps_rng);

    Eigen::VectorXd effect_weights;  // the series multiplying b
    if (cfg.study != StudyKind::Autocorrelation && cfg.effect_var > 0.0) {
        Rng b_rng = root.fork(static_cast<std::uint64_t>(p) + 2);
        const Eigen::VectorXd b = gen_ar1(n, cfg.tau, cfg.effect_var, b_rng);
        if (cfg.study == StudyKind::RandomEffectAligned) {
            effect_weights = x.col(0);
        } else {
            Rng z_rng = root.fork(static_cast<std::uint64_t>(p) + 3);
            effect_weights = gen_ar1(n, 0.0, 1.0, z_rng);
        }
        noise += effect_weights.cwiseProduct(b);
    }

    Eigen::VectorXd y = x * beta + noise;

    // Conditional noise covariance given the design:
    //   sigma2 * p * rho^|i-j|                      (serial part)
    // + w_i w_j * effect_var * tau^|i-j|  (aligned)
    // + delta_ij * effect_var             (unaligned; Z integrates out)
    Eigen::MatrixXd middle = noise_var * toeplitz_quad(x, cfg.rho);
    if (cfg.study == StudyKind::RandomEffectAligned && cfg.effect_var > 0.0) {
        middle.noalias() +=
            cfg.effect_var * toeplitz_quad(x.col(0).asDiagonal() * x, cfg.tau);
    } else if (cfg.study == StudyKind::RandomEffectUnaligned && cfg.effect_var > 0.0) {
        middle.noalias() += cfg.effect_var * (x.transpose() * x);
    }
    const Eigen::MatrixXd gram_inv = spd_inverse(x.transpose() * x, ErrorCode::RankDeficient);
    CovarianceMatrix true_cov(gram_inv * middle * gram_inv, CovStage::TrueKnown);

    return GeneratedData{Dataset(std::move(x), std::move(y)), std::move(beta),
                         std::move(true_cov)};
}

}  // namespace

GeneratedData gen_dataset(const DgpConfig& cfg) { return generate(cfg, nullptr); }

GeneratedData gen_dataset_with_beta(const DgpConfig& cfg, const Eigen::VectorXd& beta) {
    return generate(cfg, &beta);
}

double analytic_limit(const DgpConfig& cfg, double fourth_moment) {
    cfg.validate();
    switch (cfg.study) {
        case StudyKind::Autocorrelation:
            return cfg.sigma2 * (1.0 + cfg.pi * cfg.rho) / (1.0 - cfg.pi * cfg.rho);
        case StudyKind::RandomEffectAligned:
            if (cfg.pi != 0.0 || cfg.rho != 0.0) {
                throw Error(ErrorCode::UnsupportedConfig,
                            "aligned-effect limit requires pi = rho = 0");
            }
            return cfg.sigma2 +
                   cfg.effect_var * (fourth_moment + 2.0 * cfg.tau / (1.0 - cfg.tau));
        case StudyKind::RandomEffectUnaligned:
            if (cfg.pi != 0.0 || cfg.rho != 0.0) {
                throw Error(ErrorCode::UnsupportedConfig,
                            "unaligned-effect limit requires pi = rho = 0");
            }
            return cfg.sigma2 + cfg.effect_var;
    }
    throw Error(ErrorCode::UnsupportedConfig, "unknown study kind");
}

std::vector<NvarEstimate> empirical_nvar(const DgpConfig& cfg,
                                         const std::vector<Eigen::Index>& n_list, int replicates,
                                         int workers) {
    if (cfg.p != 1) {
        throw Error(ErrorCode::UnsupportedConfig, "empirical_nvar requires p = 1");
    }
    if (replicates < 2) {
        throw Error(ErrorCode::InvalidConfig, "need at least 2 replicates");
    }
    std::vector<NvarEstimate> out;
    out.reserve(n_list.size());
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
        const Eigen::Index n = n_list[ni];
        std::vector<double> errors(static_cast<std::size_t>(replicates));
        parallel_for(errors.size(), workers, [&](std::size_t r) {
            DgpConfig rep_cfg = cfg;
            rep_cfg.n = n;
            rep_cfg.seed = Rng::derive2(cfg.seed, ni, r);
            const GeneratedData gen = gen_dataset(rep_cfg);
            const Coefficients fit = ols_fit(gen.data);
            errors[r] = fit.values(0) - gen.true_beta(0);
        });
        double mean = 0.0;
        for (double e : errors) mean += e;
        mean /= static_cast<double>(replicates);
        double var = 0.0, m4 = 0.0;
        for (double e : errors) {
            const double d = e - mean;
            var += d * d;
            m4 += d * d * d * d;
        }
        var /= static_cast<double>(replicates - 1);
        m4 /= static_cast<double>(replicates);
        const double nd = static_cast<double>(n);
        const double se_var =
            std::sqrt(std::max(m4 - var * var, 0.0) / static_cast<double>(replicates));
        out.push_back(NvarEstimate{n, nd * var, nd * se_var});
    }
    return out;
}

namespace {

struct Cell {
    StudyMethod method;
    double lambda;
    double kappa;
    double mu;
    int shrink_index;  // -1 when not applicable
};

std::vector<Cell> enumerate_cells(const std::vector<StudyMethod>& methods,
                                  const std::vector<double>& lambda_grid,
                                  const std::vector<ShrinkageParams>& shrink_grid) {
    std::vector<Cell> cells;
    for (StudyMethod method : methods) {
        switch (method) {
            case StudyMethod::OLS:
                cells.push_back(Cell{method, 0.0, 0.0, 0.0, -1});
                break;
            case StudyMethod::StandardRidge:
            case StudyMethod::CorrectTworegRidge:
                for (double lambda : lambda_grid) {
                    cells.push_back(Cell{method, lambda, 0.0, 0.0, -1});
                }
                break;
            case StudyMethod::TworegRidge:
                for (std::size_t s = 0; s < shrink_grid.size(); ++s) {
                    for (double lambda : lambda_grid) {
                        cells.push_back(Cell{method, lambda, shrink_grid[s].kappa,
                                             shrink_grid[s].mu, static_cast<int>(s)});
                    }
                }
                break;
        }
    }
    return cells;
}

Eigen::VectorXd tworeg_solve(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                             const Eigen::MatrixXd& cov, double lambda) {
    const Eigen::MatrixXd system = gram + lambda * (gram * cov);
    return Eigen::PartialPivLU<Eigen::MatrixXd>(system).solve(rhs);
}

}  // namespace

std::vector<StudyResult> run_study(const DgpConfig& cfg, const std::vector<StudyMethod>& methods,
                                   const std::vector<double>& lambda_grid,
                                   const std::vector<ShrinkageParams>& shrink_grid,
                                   int replicates, const BootstrapConfig& bootstrap,
                                   int workers) {
    cfg.validate();
    if (replicates < 2) {
        throw Error(ErrorCode::InvalidConfig, "need at least 2 replicates");
    }
    if (methods.empty()) {
        throw Error(ErrorCode::InvalidConfig, "method list must be nonempty");
    }
    const bool wants_tworeg =
        std::find(methods.begin(), methods.end(), StudyMethod::TworegRidge) != methods.end();
    if (wants_tworeg && shrink_grid.empty()) {
        throw Error(ErrorCode::InvalidConfig, "tworeg ridge needs a shrinkage grid");
    }
    for (double lambda : lambda_grid) {
        if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidPenalty, "lambda grid must be >= 0");
    }
    const std::vector<Cell> cells = enumerate_cells(methods, lambda_grid, shrink_grid);

    // Per replicate, per cell: squared error, beta_1^2, ||beta||^2.
    const std::size_t n_cells = cells.size();
    const std::size_t n_reps = static_cast<std::size_t>(replicates);
    std::vector<Eigen::VectorXd> records(n_reps);

    parallel_for(n_reps, workers, [&](std::size_t r) {
        DgpConfig rep_cfg = cfg;
        rep_cfg.seed = Rng::derive2(cfg.seed, 0xDA7AULL, r);
        const GeneratedData gen = gen_dataset(rep_cfg);
        const Eigen::MatrixXd& x = gen.data.design();
        const Eigen::MatrixXd gram = x.transpose() * x;
        const Eigen::VectorXd rhs = x.transpose() * gen.data.response();

        // Shrunk-and-normalized covariances, one per grid point.
        std::vector<Eigen::MatrixXd> tworeg_covs;
        if (wants_tworeg) {
            BootstrapConfig rep_boot = bootstrap;
            rep_boot.seed = Rng::derive2(bootstrap.seed, 0xB007ULL, r);
            const CovarianceMatrix crude = block_bootstrap_cov(gen.data, rep_boot);
            const CovarianceMatrix prior = prior_cov(x, crude);
            tworeg_covs.reserve(shrink_grid.size());
            for (const auto& params : shrink_grid) {
                tworeg_covs.push_back(
                    normalize(shrink(crude, prior, params), x).entries());
            }
        }

        Eigen::VectorXd record(3 * n_cells);
        for (std::size_t c = 0; c < n_cells; ++c) {
            const Cell& cell = cells[c];
            Eigen::VectorXd beta;
            switch (cell.method) {
                case StudyMethod::OLS:
                    beta = solve_spd(gram, rhs, ErrorCode::RankDeficient);
                    break;
                case StudyMethod::StandardRidge: {
                    Eigen::MatrixXd g = gram;
                    g.diagonal().array() += cell.lambda;
                    beta = solve_spd(g, rhs, ErrorCode::RankDeficient);
                    break;
                }
                case StudyMethod::TworegRidge:
                    beta = tworeg_solve(gram, rhs, tworeg_covs[cell.shrink_index], cell.lambda);
                    break;
                case StudyMethod::CorrectTworegRidge:
                    beta = tworeg_solve(gram, rhs, gen.true_cov->entries(), cell.lambda);
                    break;
            }
            const Eigen::VectorXd diff = beta - gen.true_beta;
            record(3 * c) = diff.squaredNorm();
            record(3 * c + 1) = beta(0) * beta(0);
            record(3 * c + 2) = beta.squaredNorm();
        }
        records[r] = std::move(record);
    });

    std::vector<StudyResult> results(n_cells);
    for (std::size_t c = 0; c < n_cells; ++c) {
        double sum = 0.0, sum_b1 = 0.0, sum_total = 0.0;
        for (std::size_t r = 0; r < n_reps; ++r) {
            sum += records[r](3 * c);
            sum_b1 += records[r](3 * c + 1);
            sum_total += records[r](3 * c + 2);
        }
        const double mean = sum / static_cast<double>(n_reps);
        const double mean_b1 = sum_b1 / static_cast<double>(n_reps);
        double ssq = 0.0, ssq_b1 = 0.0;
        for (std::size_t r = 0; r < n_reps; ++r) {
            const double d = records[r](3 * c) - mean;
            ssq += d * d;
            const double d1 = records[r](3 * c + 1) - mean_b1;
            ssq_b1 += d1 * d1;
        }
        const double root_n = std::sqrt(static_cast<double>(n_reps));
        const double se = std::sqrt(ssq / static_cast<double>(n_reps - 1)) / root_n;
        const double se_b1 = std::sqrt(ssq_b1 / static_cast<double>(n_reps - 1)) / root_n;
        results[c] = StudyResult{cells[c].method,
                                 cells[c].lambda,
                                 cells[c].kappa,
                                 cells[c].mu,
                                 mean,
                                 se,
                                 mean_b1,
                                 se_b1,
                                 sum_total / static_cast<double>(n_reps),
                                 replicates};
    }
    return results;
}

}  // namespace tworeg
