#include "tworeg/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "tworeg/covariance.hpp"
#include "tworeg/estimators.hpp"
#include "tworeg/io.hpp"
#include "tworeg/realdata.hpp"
#include "tworeg/simulation.hpp"

namespace tworeg {

namespace {

namespace fs = std::filesystem;

std::vector<double> log_grid(double lo, double hi, int points) {
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(points));
    if (points == 1) {
        grid.push_back(lo);
        return grid;
    }
    const double step = (std::log10(hi) - std::log10(lo)) / (points - 1);
    for (int i = 0; i < points; ++i) {
        grid.push_back(std::pow(10.0, std::log10(lo) + step * i));
    }
    return grid;
}

int exit_code_for(const Error& err) {
    switch (err.category()) {
        case ErrorCategory::Validation: return 2;
        case ErrorCategory::Data: return 3;
        case ErrorCategory::Numerical: return 4;
    }
    return 4;
}

/// Resolved configuration plus a timestamped sidecar next to the outputs, so
/// any run can be reproduced from its own directory via --config.
void write_audit_trail(CLI::App* cmd, const std::string& out_dir) {
    fs::create_directories(out_dir);
    write_text_file((fs::path(out_dir) / "config.resolved.ini").string(),
                    "[" + cmd->get_name() + "]\n" + cmd->config_to_str(true, true));
    nlohmann::json sidecar;
    sidecar["command"] = cmd->get_name();
    const auto now = std::chrono::system_clock::now();
    sidecar["timestamp_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    write_text_file((fs::path(out_dir) / "run.json").string(), sidecar.dump(2) + "\n");
}

std::vector<double> default_sim_lambda_grid() {
    std::vector<double> grid = log_grid(1e-2, 1e6, 41);
    grid.insert(grid.begin(), 0.0);
    return grid;
}

struct SimulateOptions {
    std::string study = "autocorrelation";
    long n = 2000;
    int p = 10;
    double pi = -1.0;  // negative -> study default
    double rho = -1.0;
    double tau = -1.0;
    double sigma2 = -1.0;
    double effect_var = 5.0;
    int replicates = 2000;
    std::uint64_t seed = 1;
    int bootstrap_b = 2000;
    int bootstrap_blocks = 20;
    std::vector<double> lambda_grid = default_sim_lambda_grid();
    std::vector<double> shrink_pairs = {0.0, 0.0, 0.2, 0.2, 0.4, 0.4, 0.6, 0.6, 0.8, 0.8};
    std::string out = ".";
    int workers = 1;
};

int cmd_simulate(const SimulateOptions& opt, CLI::App* cmd) {
    DgpConfig cfg;
    if (opt.study == "autocorrelation") {
        cfg.study = StudyKind::Autocorrelation;
        cfg.pi = opt.pi < 0 ? std::exp(-0.1) : opt.pi;
        cfg.rho = opt.rho < 0 ? std::exp(-0.1) : opt.rho;
        cfg.tau = std::max(opt.tau, 0.0);
        cfg.sigma2 = opt.sigma2 < 0 ? 10.0 : opt.sigma2;
        cfg.effect_var = 0.0;
    } else if (opt.study == "random-effect-aligned" || opt.study == "random-effect-unaligned") {
        cfg.study = opt.study == "random-effect-aligned" ? StudyKind::RandomEffectAligned
                                                         : StudyKind::RandomEffectUnaligned;
        cfg.pi = std::max(opt.pi, 0.0);
        cfg.rho = std::max(opt.rho, 0.0);
        cfg.tau = opt.tau < 0 ? std::exp(-0.01) : opt.tau;
        cfg.sigma2 = opt.sigma2 < 0 ? 0.5 : opt.sigma2;
        cfg.effect_var = opt.effect_var;
    } else {
        throw Error(ErrorCode::InvalidConfig, "unknown study '" + opt.study + "'");
    }
    cfg.n = opt.n;
    cfg.p = opt.p;
    cfg.seed = opt.seed;
    if (opt.replicates < 2) {
        throw Error(ErrorCode::InvalidConfig, "need at least 2 replicates");
    }

    const std::vector<double>& lambda_grid = opt.lambda_grid;
    std::vector<ShrinkageParams> shrink_grid;
    if (opt.shrink_pairs.size() % 2 != 0) {
        throw Error(ErrorCode::InvalidConfig, "--shrink-grid takes kappa mu pairs");
    }
    for (std::size_t i = 0; i < opt.shrink_pairs.size(); i += 2) {
        shrink_grid.emplace_back(opt.shrink_pairs[i], opt.shrink_pairs[i + 1]);
    }

    BootstrapConfig bootstrap;
    bootstrap.iterations = opt.bootstrap_b;
    bootstrap.blocks = opt.bootstrap_blocks;
    bootstrap.seed = opt.seed;

    const std::vector<StudyMethod> methods = {
        StudyMethod::OLS, StudyMethod::StandardRidge, StudyMethod::TworegRidge,
        StudyMethod::CorrectTworegRidge};
    const std::vector<StudyResult> rows = run_study(cfg, methods, lambda_grid, shrink_grid,
                                                    opt.replicates, bootstrap, opt.workers);

    write_audit_trail(cmd, opt.out);
    write_text_file((fs::path(opt.out) / "study.csv").string(), study_results_csv(rows));
    write_text_file((fs::path(opt.out) / "table_error.txt").string(), format_study_table(rows));
    write_text_file((fs::path(opt.out) / "table_beta1.txt").string(), format_beta1_table(rows));
    std::cout << format_study_table(rows);
    return 0;
}

struct CovOptions {
    std::string data_path;
    std::string response_col = "y";
    std::string estimator = "bootstrap";
    int bootstrap_b = 2000;
    int bootstrap_blocks = 20;
    int folds = 20;
    std::uint64_t seed = 1;
    double kappa = -1.0;  // negative -> cross-validated
    double mu = -1.0;
    std::string metric = "frobenius";
    std::string out = ".";
    int workers = 1;
};

int cmd_cov(const CovOptions& opt, CLI::App* cmd) {
    const Dataset data = read_dataset_csv(opt.data_path, opt.response_col);
    BootstrapConfig bootstrap;
    bootstrap.iterations = opt.bootstrap_b;
    bootstrap.blocks = opt.bootstrap_blocks;
    bootstrap.seed = opt.seed;

    CovarianceMatrix crude = [&]() {
        if (opt.estimator == "bootstrap") {
            return block_bootstrap_cov(data, bootstrap, opt.workers);
        }
        if (opt.estimator == "hac") {
            return cv_hac_cov(data, FoldPlan::contiguous(data.n(), opt.folds));
        }
        throw Error(ErrorCode::InvalidConfig, "unknown estimator '" + opt.estimator + "'");
    }();
    const CovarianceMatrix prior = prior_cov(data.design(), crude);

    ShrinkageParams params;
    if (opt.kappa >= 0.0 || opt.mu >= 0.0) {
        params = ShrinkageParams(std::max(opt.kappa, 0.0), std::max(opt.mu, 0.0));
    } else {
        const CovMetric metric = [&]() {
            if (opt.metric == "frobenius") return CovMetric::Frobenius;
            if (opt.metric == "gaussian-kl") return CovMetric::GaussianKL;
            throw Error(ErrorCode::InvalidConfig, "unknown metric '" + opt.metric + "'");
        }();
        const FoldPlan folds = FoldPlan::contiguous(data.n(), opt.folds);
        params = select_shrinkage(data, folds, default_shrink_grid(), bootstrap, metric);
    }

    const CovarianceMatrix shrunk = shrink(crude, prior, params);
    const CovarianceMatrix normalized = normalize(shrunk, data.design());

    write_audit_trail(cmd, opt.out);
    write_matrix_txt((fs::path(opt.out) / "crude.txt").string(), crude.entries());
    write_matrix_txt((fs::path(opt.out) / "shrunk.txt").string(), shrunk.entries());
    write_matrix_txt((fs::path(opt.out) / "normalized.txt").string(), normalized.entries());
    nlohmann::json selected = {{"kappa", params.kappa}, {"mu", params.mu}};
    write_text_file((fs::path(opt.out) / "selected.json").string(), selected.dump(2) + "\n");
    std::cout << "kappa=" << params.kappa << " mu=" << params.mu << "\n";
    return 0;
}

struct RealdataOptions {
    std::string prices_path;
    std::vector<std::string> tickers = {"MSFT", "AAPL", "FB", "GOOGL", "AMZN"};
    std::string date_col = "date";
    std::string symbol_col = "symbol";
    std::string close_col = "close";
    std::string train_end = "2016-12-30";
    std::string test_start = "2017-01-03";
    std::vector<double> lambda_grid = log_grid(1.0, 1e6, 25);
    int bootstrap_b = 2000;
    int bootstrap_blocks = 10;
    std::uint64_t seed = 1;
    std::string out = ".";
    int workers = 1;
};

int cmd_realdata(const RealdataOptions& opt, CLI::App* cmd) {
    CsvColumns columns;
    columns.date = opt.date_col;
    columns.symbol = opt.symbol_col;
    columns.close = opt.close_col;
    const std::vector<PriceSeries> series = load_prices(opt.prices_path, opt.tickers, columns);

    const std::vector<double>& lambda_grid = opt.lambda_grid;

    BootstrapConfig bootstrap;
    bootstrap.iterations = opt.bootstrap_b;
    bootstrap.blocks = opt.bootstrap_blocks;
    bootstrap.seed = opt.seed;

    RealStudyOptions options;
    options.train_end = Date::parse(opt.train_end);
    options.test_start = Date::parse(opt.test_start);

    const RealStudyResult result =
        run_real_study(series, lambda_grid, bootstrap, options, opt.workers);

    write_audit_trail(cmd, opt.out);
    write_text_file((fs::path(opt.out) / "curve.csv").string(), curve_csv(result.curve));
    write_text_file((fs::path(opt.out) / "summary.json").string(), real_summary_json(result));
    std::cout << real_summary_json(result);
    return 0;
}

struct FitOptions {
    std::string data_path;
    std::string response_col = "y";
    std::string estimator = "ols";
    double lambda = 0.0;
    std::string cov_path;
    std::uint64_t seed = 1;
    std::string out = ".";
};

int cmd_fit(const FitOptions& opt, CLI::App* cmd) {
    const Dataset data = read_dataset_csv(opt.data_path, opt.response_col);
    Coefficients fit;
    if (opt.estimator == "ols") {
        fit = ols_fit(data);
    } else if (opt.estimator == "ridge") {
        fit = ridge_fit(data, opt.lambda);
    } else if (opt.estimator == "tworeg") {
        if (opt.cov_path.empty()) {
            throw Error(ErrorCode::InvalidConfig, "tworeg fit needs --cov");
        }
        const CovarianceMatrix cov(read_matrix_txt(opt.cov_path), CovStage::Normalized);
        fit = tworeg_ridge_fit(data, cov, opt.lambda);
    } else {
        throw Error(ErrorCode::InvalidConfig, "unknown estimator '" + opt.estimator + "'");
    }
    write_audit_trail(cmd, opt.out);
    write_coefficients((fs::path(opt.out) / "coefficients.txt").string(), fit,
                       {{"seed", std::to_string(opt.seed)}});
    std::cout << "wrote " << (fs::path(opt.out) / "coefficients.txt").string() << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Two-stage regularization of least-squares estimators"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default(true);
    app.set_config("--config");
    app.allow_config_extras(false);

    // --config lives on the root; fallthrough lets it appear after the
    // subcommand name, and config keys use the [subcommand] section.
    const auto with_config = [](CLI::App* sub) {
        sub->fallthrough();
        return sub;
    };

    SimulateOptions sim;
    CLI::App* simulate = with_config(app.add_subcommand("simulate", "Run a synthetic study"));
    simulate->add_option("--study", sim.study,
                         "autocorrelation | random-effect-aligned | random-effect-unaligned");
    simulate->add_option("--n", sim.n, "observations");
    simulate->add_option("--p", sim.p, "covariates");
    simulate->add_option("--pi", sim.pi, "AR coefficient of the first covariate");
    simulate->add_option("--rho", sim.rho, "AR coefficient of the noise");
    simulate->add_option("--tau", sim.tau, "AR coefficient of the random effect");
    simulate->add_option("--sigma2", sim.sigma2, "noise scale (noise variance = sigma2 * p)");
    simulate->add_option("--effect-var", sim.effect_var, "variance of the random effect");
    simulate->add_option("--replicates", sim.replicates, "independent repetitions");
    simulate->add_option("--seed", sim.seed, "RNG seed");
    simulate->add_option("--bootstrap-b", sim.bootstrap_b, "bootstrap iterations");
    simulate->add_option("--bootstrap-blocks", sim.bootstrap_blocks, "bootstrap blocks");
    simulate->add_option("--lambda-grid", sim.lambda_grid, "explicit lambda grid");
    simulate->add_option("--shrink-grid", sim.shrink_pairs,
                         "kappa mu pairs, e.g. 0 0 0.2 0.2");
    simulate->add_option("--out", sim.out, "output directory");
    simulate->add_option("--workers", sim.workers, "worker threads")
        ->envname("TWOREG_WORKERS");

    CovOptions cov;
    CLI::App* covcmd =
        with_config(app.add_subcommand("cov", "Covariance pipeline on a dataset file"));
    covcmd->add_option("--data", cov.data_path, "dataset CSV")->required();
    covcmd->add_option("--response-col", cov.response_col, "response column name");
    covcmd->add_option("--estimator", cov.estimator, "bootstrap | hac");
    covcmd->add_option("--bootstrap-b", cov.bootstrap_b, "bootstrap iterations");
    covcmd->add_option("--bootstrap-blocks", cov.bootstrap_blocks, "bootstrap blocks");
    covcmd->add_option("--folds", cov.folds, "folds for hac / selection");
    covcmd->add_option("--seed", cov.seed, "RNG seed");
    covcmd->add_option("--kappa", cov.kappa, "fixed kappa (otherwise cross-validated)");
    covcmd->add_option("--mu", cov.mu, "fixed mu (otherwise cross-validated)");
    covcmd->add_option("--metric", cov.metric, "frobenius | gaussian-kl");
    covcmd->add_option("--out", cov.out, "output directory");
    covcmd->add_option("--workers", cov.workers, "worker threads")->envname("TWOREG_WORKERS");

    RealdataOptions real;
    CLI::App* realcmd = with_config(
        app.add_subcommand("realdata", "Return-prediction study on price data"));
    realcmd->add_option("--prices", real.prices_path, "price CSV")->required();
    realcmd->add_option("--tickers", real.tickers, "tickers (five for the paper layout)");
    realcmd->add_option("--date-col", real.date_col, "date column name");
    realcmd->add_option("--symbol-col", real.symbol_col, "ticker column name");
    realcmd->add_option("--close-col", real.close_col, "closing price column name");
    realcmd->add_option("--train-end", real.train_end, "last training date (YYYY-MM-DD)");
    realcmd->add_option("--test-start", real.test_start, "first test date (YYYY-MM-DD)");
    realcmd->add_option("--lambda-grid", real.lambda_grid, "explicit lambda grid");
    realcmd->add_option("--bootstrap-b", real.bootstrap_b, "bootstrap iterations");
    realcmd->add_option("--bootstrap-blocks", real.bootstrap_blocks, "bootstrap blocks");
    realcmd->add_option("--seed", real.seed, "RNG seed");
    realcmd->add_option("--out", real.out, "output directory");
    realcmd->add_option("--workers", real.workers, "worker threads")->envname("TWOREG_WORKERS");

    FitOptions fit;
    CLI::App* fitcmd =
        with_config(app.add_subcommand("fit", "Fit one estimator on a dataset file"));
    fitcmd->add_option("--data", fit.data_path, "dataset CSV")->required();
    fitcmd->add_option("--response-col", fit.response_col, "response column name");
    fitcmd->add_option("--estimator", fit.estimator, "ols | ridge | tworeg");
    fitcmd->add_option("--lambda", fit.lambda, "ridge penalty");
    fitcmd->add_option("--cov", fit.cov_path, "covariance matrix file (tworeg)");
    fitcmd->add_option("--seed", fit.seed, "RNG seed");
    fitcmd->add_option("--out", fit.out, "output directory");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: InvalidConfig: " << e.what() << "\n";
        return 2;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(sim, simulate);
        if (covcmd->parsed()) return cmd_cov(cov, covcmd);
        if (realcmd->parsed()) return cmd_realdata(real, realcmd);
        if (fitcmd->parsed()) return cmd_fit(fit, fitcmd);
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return exit_code_for(err);
    } catch (const std::exception& err) {
        std::cerr << "error: Internal: " << err.what() << "\n";
        return 4;
    }
    return 2;
}

}  // namespace tworeg
