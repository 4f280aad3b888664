#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "tworeg/covariance.hpp"
#include "tworeg/estimators.hpp"
#include "tworeg/simulation.hpp"

using namespace tworeg;

namespace {

DgpConfig iid_config(Eigen::Index n, Eigen::Index p, double sigma2, std::uint64_t seed) {
    DgpConfig cfg;
    cfg.n = n;
    cfg.p = p;
    cfg.sigma2 = sigma2;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("bootstrap: single block on a single observation gives the zero matrix") {
    Eigen::MatrixXd x(1, 1);
    x << 2.0;
    Eigen::VectorXd y(1);
    y << 3.0;
    BootstrapConfig cfg;
    cfg.iterations = 50;
    cfg.blocks = 1;
    cfg.seed = 5;
    const CovarianceMatrix cov = block_bootstrap_cov(Dataset(x, y), cfg);
    CHECK(cov.stage() == CovStage::Crude);
    CHECK(cov.entries()(0, 0) == 0.0);
}

TEST_CASE("bootstrap: replicate estimates enumerate the block combinations") {
    // n = 4, two blocks, p = 1: every resample is one of four block pairs,
    // so each replicate must equal a concatenated-OLS fit of such a pair.
    Eigen::MatrixXd x(4, 1);
    x << 1.0, 2.0, 3.0, 4.0;
    Eigen::VectorXd y(4);
    y << 2.0, 3.0, -1.0, 5.0;
    const auto naive_fit = [&](int a, int b) {
        double sxy = 0.0, sxx = 0.0;
        for (int block : {a, b}) {
            for (int i = 2 * block; i < 2 * block + 2; ++i) {
                sxy += x(i, 0) * y(i);
                sxx += x(i, 0) * x(i, 0);
            }
        }
        return sxy / sxx;
    };
    std::vector<double> possible;
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) possible.push_back(naive_fit(a, b));
    }

    BootstrapConfig cfg;
    cfg.iterations = 64;
    cfg.blocks = 2;
    cfg.seed = 9;
    // Recover the replicate fits from the sample covariance indirectly: with
    // p = 1 rerun with iterations = 2 many times; each tiny run's covariance
    // is (b0 - b1)^2 / 2, which must match some pair difference.
    std::vector<double> pair_gaps;
    for (std::size_t i = 0; i < possible.size(); ++i) {
        for (std::size_t j = 0; j < possible.size(); ++j) {
            pair_gaps.push_back(0.5 * (possible[i] - possible[j]) *
                                (possible[i] - possible[j]));
        }
    }
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        BootstrapConfig two = cfg;
        two.iterations = 2;
        two.seed = seed;
        const double got = block_bootstrap_cov(Dataset(x, y), two).entries()(0, 0);
        bool matched = false;
        for (double gap : pair_gaps) {
            if (std::abs(got - gap) <= 1e-12 * std::max(1.0, std::abs(gap))) matched = true;
        }
        CHECK(matched);
    }
}

TEST_CASE("bootstrap: concentrates on the block-sandwich limit of the resampling") {
    // Conditional on the data, the multinomial block draws give the bootstrap
    // covariance the limit G^{-1} (sum_k r_k r_k^T) G^{-1} with block scores
    // r_k = X_k^T (y_k - X_k beta_hat); recompute that limit independently
    // and check entrywise agreement at 3 resampling standard errors.
    const Eigen::Index n = 500, p = 4;
    const int blocks = 20, block_len = 25;
    const GeneratedData gen = gen_dataset(iid_config(n, p, 10.0, 101));
    BootstrapConfig cfg;
    cfg.iterations = 2000;
    cfg.blocks = blocks;
    cfg.seed = 7;
    const CovarianceMatrix cov = block_bootstrap_cov(gen.data, cfg);

    const Eigen::MatrixXd& x = gen.data.design();
    const Eigen::VectorXd& y = gen.data.response();
    const Eigen::MatrixXd gram_inv = (x.transpose() * x).inverse();
    const Eigen::VectorXd beta_hat = gram_inv * (x.transpose() * y);
    Eigen::MatrixXd score_outer = Eigen::MatrixXd::Zero(p, p);
    for (int k = 0; k < blocks; ++k) {
        const auto xk = x.middleRows(k * block_len, block_len);
        const auto yk = y.segment(k * block_len, block_len);
        const Eigen::VectorXd r = xk.transpose() * (yk - xk * beta_hat);
        score_outer.noalias() += r * r.transpose();
    }
    const Eigen::MatrixXd sandwich = gram_inv * score_outer * gram_inv;
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            const double se =
                std::sqrt((sandwich(i, i) * sandwich(j, j) + sandwich(i, j) * sandwich(i, j)) /
                          (cfg.iterations - 1));
            // 3 resampling standard errors plus the O(1/Omega) second-order
            // gap between the bootstrap mean and the first-order sandwich.
            const double second_order =
                0.03 * std::sqrt(sandwich(i, i) * sandwich(j, j));
            CHECK(std::abs(cov.entries()(i, j) - sandwich(i, j)) < 3.0 * se + second_order);
        }
    }
}

TEST_CASE("bootstrap: iid noise matches the closed-form OLS covariance on average") {
    // A single dataset only exposes Omega block scores, so the conditional
    // bootstrap limit scatters around sigma2*p*(X^T X)^{-1} with relative
    // noise ~ 1/sqrt(Omega); averaging over independent datasets brings the
    // comparison inside Monte Carlo error.
    const Eigen::Index n = 400, p = 3;
    const int datasets = 40;
    Eigen::MatrixXd diffs(datasets, p * p);
    Eigen::MatrixXd scale = Eigen::MatrixXd::Zero(p, p);
    for (int d = 0; d < datasets; ++d) {
        const GeneratedData gen = gen_dataset(iid_config(n, p, 10.0, 9000 + d));
        BootstrapConfig cfg;
        cfg.iterations = 200;
        cfg.blocks = 20;
        cfg.seed = 50 + d;
        const CovarianceMatrix cov = block_bootstrap_cov(gen.data, cfg);
        const Eigen::MatrixXd closed =
            (10.0 * p) * (gen.data.design().transpose() * gen.data.design()).inverse();
        scale += closed / datasets;
        const Eigen::MatrixXd diff = cov.entries() - closed;
        for (Eigen::Index i = 0; i < p; ++i) {
            for (Eigen::Index j = 0; j < p; ++j) diffs(d, i * p + j) = diff(i, j);
        }
    }
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            const Eigen::Index col = i * p + j;
            const double mean = diffs.col(col).mean();
            const double sd = std::sqrt((diffs.col(col).array() - mean).square().sum() /
                                        (datasets - 1));
            const double se = sd / std::sqrt(static_cast<double>(datasets));
            CHECK(std::abs(mean) < 3.0 * se + 0.06 * scale(i, i));
        }
    }
}

TEST_CASE("bootstrap: autocorrelated covariate inflates its diagonal entry") {
    double first = 0.0, rest = 0.0;
    for (std::uint64_t rep = 0; rep < 3; ++rep) {
        DgpConfig cfg = iid_config(2000, 10, 10.0, 200 + rep);
        cfg.pi = std::exp(-0.1);
        cfg.rho = std::exp(-0.1);
        const GeneratedData gen = gen_dataset(cfg);
        BootstrapConfig boot;
        boot.iterations = 300;
        boot.blocks = 20;
        boot.seed = rep;
        const CovarianceMatrix cov = block_bootstrap_cov(gen.data, boot);
        first += cov.entries()(0, 0);
        for (Eigen::Index j = 1; j < 10; ++j) rest += cov.entries()(j, j) / 9.0;
    }
    CHECK(first > rest);  // Prop-style inflation, factor ~ (1+pi*rho)/(1-pi*rho)
    CHECK(first / rest > 2.0);
}

TEST_CASE("bootstrap: deterministic given the seed, for any worker count") {
    const GeneratedData gen = gen_dataset(iid_config(300, 4, 2.0, 55));
    BootstrapConfig cfg;
    cfg.iterations = 100;
    cfg.blocks = 10;
    cfg.seed = 42;
    const CovarianceMatrix serial = block_bootstrap_cov(gen.data, cfg, 1);
    const CovarianceMatrix threaded = block_bootstrap_cov(gen.data, cfg, 4);
    CHECK(serial.entries() == threaded.entries());
    const CovarianceMatrix again = block_bootstrap_cov(gen.data, cfg, 1);
    CHECK(serial.entries() == again.entries());
}

TEST_CASE("bootstrap: across seeds the estimator variance scales like 1/B") {
    const GeneratedData gen = gen_dataset(iid_config(120, 2, 1.0, 77));
    const auto variance_at = [&](int iterations) {
        std::vector<double> values;
        for (std::uint64_t seed = 0; seed < 60; ++seed) {
            BootstrapConfig cfg;
            cfg.iterations = iterations;
            cfg.blocks = 12;
            cfg.seed = seed;
            values.push_back(block_bootstrap_cov(gen.data, cfg).entries()(0, 0));
        }
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        return var / static_cast<double>(values.size() - 1);
    };
    const double v100 = variance_at(100);
    const double v400 = variance_at(400);
    const double ratio = v100 / v400;
    // log-variance ratio has sd ~ sqrt(4/(S-1)) = 0.26 over S = 60 seeds;
    // a 3-sigma band around log(4).
    CHECK(std::log(ratio) > std::log(4.0) - 0.78);
    CHECK(std::log(ratio) < std::log(4.0) + 0.78);
}

TEST_CASE("bootstrap: config validation") {
    const GeneratedData gen = gen_dataset(iid_config(20, 2, 1.0, 1));
    BootstrapConfig cfg;
    cfg.iterations = 1;
    CHECK_THROWS_AS(block_bootstrap_cov(gen.data, cfg), Error);
    cfg.iterations = 10;
    cfg.blocks = 21;
    CHECK_THROWS_AS(block_bootstrap_cov(gen.data, cfg), Error);
}

TEST_CASE("cv hac: noiseless data gives the zero matrix") {
    Rng rng(31);
    const Eigen::MatrixXd x = oracles::random_matrix(60, 3, rng);
    const Eigen::VectorXd beta = oracles::random_vector(3, rng);
    const Dataset data(x, x * beta);
    const CovarianceMatrix cov = cv_hac_cov(data, FoldPlan::contiguous(60, 6));
    CHECK(cov.entries().cwiseAbs().maxCoeff() < 1e-18);
}

TEST_CASE("cv hac: leave-one-out on iid noise matches the sandwich closed form") {
    // Paired Monte Carlo over datasets; the design part cancels exactly, so
    // the comparison isolates the residual noise.
    const Eigen::Index n = 500, p = 3;
    const int datasets = 150;
    Eigen::MatrixXd diffs(datasets, p * p);
    for (int d = 0; d < datasets; ++d) {
        const GeneratedData gen = gen_dataset(iid_config(n, p, 1.0, 400 + d));
        const CovarianceMatrix cov =
            cv_hac_cov(gen.data, FoldPlan::contiguous(n, static_cast<int>(n)));
        const Eigen::MatrixXd closed =
            (1.0 * p) *
            (gen.data.design().transpose() * gen.data.design()).inverse();
        const Eigen::MatrixXd diff = cov.entries() - closed;
        for (Eigen::Index i = 0; i < p; ++i) {
            for (Eigen::Index j = 0; j < p; ++j) diffs(d, i * p + j) = diff(i, j);
        }
    }
    for (Eigen::Index col = 0; col < p * p; ++col) {
        const double mean = diffs.col(col).mean();
        const double sd = std::sqrt((diffs.col(col).array() - mean).square().sum() /
                                    (datasets - 1));
        const double se = sd / std::sqrt(static_cast<double>(datasets));
        CHECK(std::abs(mean) < 3.0 * se + 0.01 * (1.0 * p) * (3.0 / n));
    }
}

TEST_CASE("cv hac: AR noise inflates the autocorrelated covariate's diagonal") {
    double first = 0.0, rest = 0.0;
    for (std::uint64_t rep = 0; rep < 3; ++rep) {
        DgpConfig cfg = iid_config(2000, 10, 10.0, 600 + rep);
        cfg.pi = std::exp(-0.1);
        cfg.rho = std::exp(-0.1);
        const GeneratedData gen = gen_dataset(cfg);
        const CovarianceMatrix cov = cv_hac_cov(gen.data, FoldPlan::contiguous(2000, 20));
        first += cov.entries()(0, 0);
        for (Eigen::Index j = 1; j < 10; ++j) rest += cov.entries()(j, j) / 9.0;
    }
    CHECK(first > 2.0 * rest);
}

TEST_CASE("cv hac: rank-deficient leave-out design names the fold") {
    Eigen::MatrixXd x(4, 2);
    x << 1.0, 0.0,
         0.0, 1.0,
         1.0, 1.0,
         2.0, 2.0;
    Eigen::VectorXd y(4);
    y << 1.0, 2.0, 3.0, 4.0;
    const Dataset data(x, y);
    try {
        cv_hac_cov(data, FoldPlan::contiguous(4, 2));
        FAIL("expected RankDeficient");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::RankDeficient);
        CHECK(std::string(err.what()).find("fold 0") != std::string::npos);
    }
}

TEST_CASE("prior: orthonormal design with trace p gives the identity") {
    const Eigen::MatrixXd design = Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd crude = Eigen::MatrixXd::Zero(3, 3);
    crude.diagonal() << 1.5, 0.5, 1.0;  // trace = 3 = p
    const CovarianceMatrix prior = prior_cov(design, CovarianceMatrix(crude, CovStage::Crude));
    CHECK(prior.stage() == CovStage::Prior);
    CHECK(oracles::rel_err(prior.entries(), Eigen::MatrixXd::Identity(3, 3)) < 1e-12);
}

TEST_CASE("prior: trace always matches the crude estimate") {
    Rng rng(61);
    for (int rep = 0; rep < 10; ++rep) {
        Rng sub = rng.fork(rep);
        const Eigen::MatrixXd design = oracles::random_matrix(30, 4, sub);
        const CovarianceMatrix crude(oracles::random_spd(4, sub), CovStage::Crude);
        const CovarianceMatrix prior = prior_cov(design, crude);
        CHECK(std::abs(prior.trace() - crude.trace()) <= 1e-12 * crude.trace());
    }
}

TEST_CASE("prior: matches an extended-precision recomputation") {
    Rng rng(62);
    const Eigen::MatrixXd design = oracles::random_matrix(20, 3, rng);
    const Eigen::MatrixXd crude = oracles::random_spd(3, rng);
    const CovarianceMatrix prior =
        prior_cov(design, CovarianceMatrix(crude, CovStage::Crude));

    const oracles::LongMatrix xl = design.cast<long double>();
    const oracles::LongMatrix gram = xl.transpose() * xl;
    oracles::LongMatrix gram_inv(3, 3);
    for (int j = 0; j < 3; ++j) {
        oracles::LongVector e = oracles::LongVector::Zero(3);
        e(j) = 1.0L;
        gram_inv.col(j) = oracles::gauss_jordan_solve(gram, e);
    }
    const long double scale = crude.cast<long double>().trace() / gram_inv.trace();
    const Eigen::MatrixXd expected = (gram_inv * scale).cast<double>();
    CHECK(oracles::rel_err(prior.entries(), expected) < 1e-12);
}

TEST_CASE("prior: zero-trace crude rejected") {
    const Eigen::MatrixXd design = Eigen::MatrixXd::Identity(2, 2);
    const CovarianceMatrix zero(Eigen::MatrixXd::Zero(2, 2), CovStage::Crude);
    try {
        prior_cov(design, zero);
        FAIL("expected DegeneratePrior");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::DegeneratePrior);
    }
}

TEST_CASE("pca projection: fixed point when already diagonal in the prior basis") {
    Rng rng(71);
    const Eigen::MatrixXd prior_m = oracles::random_spd(4, rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(prior_m);
    Eigen::VectorXd diag(4);
    diag << 3.0, 1.0, 0.5, 2.0;
    const Eigen::MatrixXd crude_m =
        eig.eigenvectors() * diag.asDiagonal() * eig.eigenvectors().transpose();
    const CovarianceMatrix projected = pca_project(
        CovarianceMatrix(crude_m, CovStage::Crude), CovarianceMatrix(prior_m, CovStage::Prior));
    CHECK(oracles::rel_err(projected.entries(), crude_m) < 1e-12);
}

TEST_CASE("pca projection: identity prior zeroes the off-diagonal") {
    Rng rng(72);
    const Eigen::MatrixXd crude = oracles::random_spd(3, rng);
    const CovarianceMatrix projected =
        pca_project(CovarianceMatrix(crude, CovStage::Crude),
                    CovarianceMatrix(Eigen::MatrixXd::Identity(3, 3), CovStage::Prior));
    CHECK(oracles::rel_err(Eigen::MatrixXd(projected.entries().diagonal().asDiagonal()),
                           Eigen::MatrixXd(crude.diagonal().asDiagonal())) < 1e-12);
    CHECK(projected.entries()(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pca projection: Frobenius-nearest among matrices diagonal in U") {
    Rng rng(73);
    const Eigen::MatrixXd prior_m = oracles::random_spd(4, rng);
    const Eigen::MatrixXd crude_m = oracles::random_spd(4, rng);
    const CovarianceMatrix projected = pca_project(
        CovarianceMatrix(crude_m, CovStage::Crude), CovarianceMatrix(prior_m, CovStage::Prior));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(prior_m);
    const Eigen::MatrixXd& u = eig.eigenvectors();
    const double base = (crude_m - projected.entries()).norm();
    for (int trial = 0; trial < 1000; ++trial) {
        Eigen::VectorXd diag = oracles::random_vector(4, rng) * 2.0;
        const Eigen::MatrixXd candidate = u * diag.asDiagonal() * u.transpose();
        CHECK(base <= (crude_m - candidate).norm() + 1e-12);
    }
}

TEST_CASE("pca projection: idempotent and Frobenius-contractive") {
    Rng rng(74);
    for (int rep = 0; rep < 10; ++rep) {
        Rng sub = rng.fork(rep);
        const CovarianceMatrix crude(oracles::random_spd(4, sub), CovStage::Crude);
        const CovarianceMatrix prior(oracles::random_spd(4, sub), CovStage::Prior);
        const CovarianceMatrix once = pca_project(crude, prior);
        const CovarianceMatrix twice = pca_project(once, prior);
        CHECK(oracles::rel_err(twice.entries(), once.entries()) < 1e-12);
        CHECK(once.entries().norm() <= crude.entries().norm() * (1.0 + 1e-12));
    }
}

TEST_CASE("shrink: boundary identities are exact") {
    Rng rng(81);
    const CovarianceMatrix crude(oracles::random_spd(3, rng), CovStage::Crude);
    const CovarianceMatrix prior(oracles::random_spd(3, rng), CovStage::Prior);
    const CovarianceMatrix at_prior = shrink(crude, prior, ShrinkageParams(1.0, 0.3));
    CHECK(at_prior.entries() == prior.entries());
    CHECK(at_prior.stage() == CovStage::Shrunk);
    const CovarianceMatrix at_crude = shrink(crude, prior, ShrinkageParams(0.0, 0.0));
    CHECK(at_crude.entries() == crude.entries());
}

TEST_CASE("shrink: midpoint matches extended-precision evaluation") {
    Rng rng(82);
    const Eigen::MatrixXd crude = oracles::random_spd(3, rng);
    const Eigen::MatrixXd prior = oracles::random_spd(3, rng);
    const CovarianceMatrix got = shrink(CovarianceMatrix(crude, CovStage::Crude),
                                        CovarianceMatrix(prior, CovStage::Prior),
                                        ShrinkageParams(0.5, 0.5));

    // Long-double recomputation of the combination, including the projection.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(prior);
    const oracles::LongMatrix u = eig.eigenvectors().cast<long double>();
    const oracles::LongMatrix cl = crude.cast<long double>();
    oracles::LongMatrix basis = u.transpose() * cl * u;
    for (Eigen::Index i = 0; i < 3; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) {
            if (i != j) basis(i, j) = 0.0L;
        }
    }
    const oracles::LongMatrix projected = u * basis * u.transpose();
    const oracles::LongMatrix expected =
        0.5L * (0.5L * cl + 0.5L * projected) + 0.5L * prior.cast<long double>();
    CHECK(oracles::rel_err(got.entries(), Eigen::MatrixXd(expected.cast<double>())) < 1e-13);
}

TEST_CASE("shrink: PSD in, PSD out across the grid") {
    Rng rng(83);
    for (int rep = 0; rep < 5; ++rep) {
        Rng sub = rng.fork(rep);
        const CovarianceMatrix crude(oracles::random_spd(4, sub, 0.0), CovStage::Crude);
        const CovarianceMatrix prior(oracles::random_spd(4, sub), CovStage::Prior);
        for (const auto& params : default_shrink_grid()) {
            const CovarianceMatrix out = shrink(crude, prior, params);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.entries());
            CHECK(eig.eigenvalues()(0) >= -1e-12 * out.trace());
        }
    }
}

TEST_CASE("prop 4.1: ridge-objective minimizer equals the convex combination") {
    Rng rng(91);
    const CovarianceMatrix crude(oracles::random_spd(3, rng), CovStage::Crude);
    const CovarianceMatrix prior(oracles::random_spd(3, rng), CovStage::Prior);
    CHECK(verify_prop41(crude, prior, 0.0));
    CHECK(verify_prop41(crude, prior, 0.5));
    for (double kappa = 0.1; kappa < 0.95; kappa += 0.1) {
        CHECK(verify_prop41(crude, prior, kappa));
    }
    CHECK_THROWS_AS(verify_prop41(crude, prior, 1.0), Error);
}

TEST_CASE("normalize: inverse gram is already normalized; scale is removed") {
    Rng rng(95);
    const Eigen::MatrixXd design = oracles::random_matrix(40, 4, rng);
    const Eigen::MatrixXd gram_inv = (design.transpose() * design).inverse();
    const CovarianceMatrix base(gram_inv, CovStage::Shrunk);
    const CovarianceMatrix normalized = normalize(base, design);
    CHECK(normalized.stage() == CovStage::Normalized);
    CHECK(oracles::rel_err(normalized.entries(), gram_inv) < 1e-12);

    const CovarianceMatrix scaled(7.5 * gram_inv, CovStage::Shrunk);
    CHECK(oracles::rel_err(normalize(scaled, design).entries(), gram_inv) < 1e-12);
}

TEST_CASE("normalize: defining trace identity and scale invariance") {
    Rng rng(96);
    for (int rep = 0; rep < 10; ++rep) {
        Rng sub = rng.fork(rep);
        const Eigen::MatrixXd design = oracles::random_matrix(30, 3, sub);
        const Eigen::MatrixXd c = oracles::random_spd(3, sub);
        const CovarianceMatrix normalized =
            normalize(CovarianceMatrix(c, CovStage::Shrunk), design);
        const double trace = (design.transpose() * design * normalized.entries()).trace();
        CHECK(std::abs(trace - 3.0) < 1e-12 * 3.0);

        const double scale = 0.1 + 5.0 * sub.next_double();
        const CovarianceMatrix rescaled =
            normalize(CovarianceMatrix(scale * c, CovStage::Shrunk), design);
        CHECK(oracles::rel_err(rescaled.entries(), normalized.entries()) < 1e-12);
    }
}

TEST_CASE("normalize: indifferent to covariate rescaling") {
    Rng rng(97);
    const Eigen::MatrixXd design = oracles::random_matrix(30, 3, rng);
    const Eigen::MatrixXd c = oracles::random_spd(3, rng);
    Eigen::VectorXd scales(3);
    scales << 2.0, 0.25, 10.0;
    const Eigen::MatrixXd d = scales.asDiagonal();
    const Eigen::MatrixXd d_inv = scales.cwiseInverse().asDiagonal();

    const Eigen::MatrixXd base = normalize(CovarianceMatrix(c, CovStage::Shrunk), design)
                                     .entries();
    const Eigen::MatrixXd rescaled =
        normalize(CovarianceMatrix(d_inv * c * d_inv, CovStage::Shrunk), design * d).entries();
    CHECK(oracles::rel_err(rescaled, Eigen::MatrixXd(d_inv * base * d_inv)) < 1e-12);
}

TEST_CASE("normalize: nonpositive trace rejected") {
    const Eigen::MatrixXd design = Eigen::MatrixXd::Identity(2, 2);
    const CovarianceMatrix zero(Eigen::MatrixXd::Zero(2, 2), CovStage::Shrunk);
    try {
        normalize(zero, design);
        FAIL("expected DegenerateNormalization");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::DegenerateNormalization);
    }
}

TEST_CASE("gaussian kl: zero at equality, positive otherwise") {
    Rng rng(98);
    const Eigen::MatrixXd a = oracles::random_spd(3, rng);
    const Eigen::MatrixXd b = oracles::random_spd(3, rng);
    CHECK(gaussian_kl_sym(a, a) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(gaussian_kl_sym(a, b) > 0.0);
}

TEST_CASE("selection: singleton grid returns its only point") {
    const GeneratedData gen = gen_dataset(iid_config(120, 3, 1.0, 700));
    BootstrapConfig cfg;
    cfg.iterations = 20;
    cfg.blocks = 4;
    cfg.seed = 3;
    const std::vector<ShrinkageParams> grid = {ShrinkageParams(0.0, 0.0)};
    const ShrinkageParams chosen = select_shrinkage(
        gen.data, FoldPlan::contiguous(120, 4), grid, cfg, CovMetric::Frobenius);
    CHECK(chosen.kappa == 0.0);
    CHECK(chosen.mu == 0.0);
}

TEST_CASE("selection: correct prior plus noisy crude estimate favors shrinkage") {
    // iid homoscedastic data: the true covariance is proportional to
    // (X^T X)^{-1}, i.e. the prior is right, and B is tiny so the crude
    // estimate is noise. Heavy shrinkage should win nearly always.
    int heavy = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        const GeneratedData gen = gen_dataset(iid_config(240, 4, 4.0, 800 + t));
        BootstrapConfig cfg;
        cfg.iterations = 8;
        cfg.blocks = 4;
        cfg.seed = 31 * t + 1;
        const ShrinkageParams chosen =
            select_shrinkage(gen.data, FoldPlan::contiguous(240, 4),
                             {ShrinkageParams(0.0, 0.0), ShrinkageParams(0.5, 0.0),
                              ShrinkageParams(1.0, 0.0)},
                             cfg, CovMetric::Frobenius);
        if (chosen.kappa >= 0.5) ++heavy;
    }
    CHECK(heavy >= 80);
}

TEST_CASE("selection: injected exact covariance makes raw estimates win") {
    // Strongly heteroscedastic noise aligned with the first covariate makes
    // the true covariance very different from the prior; handing the
    // selector the exact covariance should drive kappa toward zero.
    int light = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        Rng rng(900 + t);
        const Eigen::Index n = 240, p = 3;
        Eigen::MatrixXd x = oracles::random_matrix(n, p, rng);
        Eigen::VectorXd noise_sd(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            noise_sd(i) = std::sqrt(0.25 + 9.0 * x(i, 0) * x(i, 0));
        }
        Eigen::VectorXd y(n);
        const Eigen::VectorXd beta = oracles::random_vector(p, rng);
        for (Eigen::Index i = 0; i < n; ++i) {
            y(i) = x.row(i).dot(beta) + noise_sd(i) * rng.next_gaussian();
        }
        const Dataset data(x, y);

        const CrudeEstimator exact = [&](const Dataset& subset, int, std::uint64_t) {
            const Eigen::MatrixXd gram_inv =
                (subset.design().transpose() * subset.design()).inverse();
            Eigen::MatrixXd middle = Eigen::MatrixXd::Zero(p, p);
            // Recover each subset row's noise variance from its first
            // covariate (the generating rule above).
            for (Eigen::Index i = 0; i < subset.n(); ++i) {
                const double s2 = 0.25 + 9.0 * subset.design()(i, 0) * subset.design()(i, 0);
                middle.noalias() += s2 * subset.design().row(i).transpose() *
                                    subset.design().row(i);
            }
            return CovarianceMatrix(gram_inv * middle * gram_inv, CovStage::Crude);
        };
        BootstrapConfig cfg;
        cfg.iterations = 50;
        cfg.blocks = 4;
        cfg.seed = 17 * t + 5;
        const ShrinkageParams chosen = select_shrinkage_with(
            data, FoldPlan::contiguous(n, 4),
            {ShrinkageParams(0.0, 0.0), ShrinkageParams(0.5, 0.0), ShrinkageParams(1.0, 0.0)},
            cfg, CovMetric::Frobenius, exact);
        if (chosen.kappa == 0.0) ++light;
    }
    CHECK(light >= 80);
}

TEST_CASE("selection: tie-break prefers smaller kappa then smaller mu") {
    const GeneratedData gen = gen_dataset(iid_config(120, 3, 1.0, 701));
    BootstrapConfig cfg;
    cfg.iterations = 20;
    cfg.blocks = 4;
    cfg.seed = 3;
    // Duplicated grid points guarantee exact score ties.
    const std::vector<ShrinkageParams> grid = {ShrinkageParams(0.4, 0.6),
                                               ShrinkageParams(0.4, 0.6),
                                               ShrinkageParams(0.4, 0.6)};
    const ShrinkageParams chosen = select_shrinkage(
        gen.data, FoldPlan::contiguous(120, 4), grid, cfg, CovMetric::Frobenius);
    CHECK(chosen.kappa == 0.4);
    CHECK(chosen.mu == 0.6);
}

TEST_CASE("fold plan: validation") {
    const FoldPlan plan = FoldPlan::contiguous(10, 3);
    CHECK(plan.count() == 3);
    CHECK(plan.boundaries()[0].second - plan.boundaries()[0].first == 4);
    CHECK(plan.n() == 10);
    CHECK_THROWS_AS(FoldPlan({{0, 3}, {4, 6}}), Error);          // gap
    CHECK_THROWS_AS(FoldPlan({{0, 5}, {5, 6}}), Error);          // sizes differ by > 1
    CHECK_THROWS_AS(FoldPlan::contiguous(5, 6), Error);          // too many folds
}
