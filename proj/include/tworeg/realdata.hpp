#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "tworeg/covariance.hpp"
#include "tworeg/types.hpp"

namespace tworeg {

struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    auto operator<=>(const Date&) const = default;

    static Date parse(const std::string& iso);  // YYYY-MM-DD
    std::string to_string() const;
};

/// Daily closing prices for one ticker; dates strictly increasing, closes
/// strictly positive.
struct PriceSeries {
    std::string ticker;
    std::vector<Date> dates;
    Eigen::VectorXd closes;

    void validate() const;
};

struct CsvColumns {
    std::string date = "date";
    std::string symbol = "symbol";
    std::string close = "close";
};

/// Reads the price CSV and returns one series per requested ticker, all
/// aligned on the intersection of their trading dates.
std::vector<PriceSeries> load_prices(const std::string& path,
                                     const std::vector<std::string>& tickers,
                                     const CsvColumns& columns = {});

enum class SplitTag { Train, Test };

/// Return-prediction design for one target: response is the target's
/// log-return `horizon` days ahead; covariates are the short- and long-lag
/// past log-returns of every series. Head rows without defined covariates
/// and tail rows without a defined response are dropped. Rank validation is
/// deferred to fitting so degenerate feature sets stay representable.
struct ReturnDataset {
    std::string target_ticker;
    Eigen::MatrixXd design;
    Eigen::VectorXd response;
    std::vector<std::string> covariate_names;
    SplitTag split = SplitTag::Train;

    Dataset to_dataset() const { return Dataset(design, response); }
};

ReturnDataset build_return_dataset(const std::vector<PriceSeries>& series,
                                   const std::string& target, SplitTag split, int horizon = 10,
                                   int short_lag = 1, int long_lag = 5);

/// Out-of-sample r^2 against the null model (zero predictions); may be
/// negative.
double evaluate_r2(const Coefficients& model, const ReturnDataset& test);

/// Restrict every series to dates <= boundary (keep_before) or >= boundary.
std::vector<PriceSeries> restrict_series(const std::vector<PriceSeries>& series,
                                         const Date& boundary, bool keep_before);

struct RealStudyOptions {
    Date train_end{2016, 12, 30};
    Date test_start{2017, 1, 3};
    int horizon = 10;
    int short_lag = 1;
    int long_lag = 5;
    std::vector<ShrinkageParams> shrink_grid;  // empty -> default 6x6 grid
};

struct CurvePoint {
    std::string method;
    double lambda = 0.0;
    double r2 = 0.0;
};

struct TargetSelection {
    std::string ticker;
    double kappa = 0.0;
    double mu = 0.0;
};

struct RealStudyResult {
    std::vector<CurvePoint> curve;
    std::vector<TargetSelection> selections;

    double peak_r2(const std::string& method) const;
};

/// Fits standard ridge, tworeg ridge (bootstrap covariance, cross-validated
/// kappa/mu, normalization) and tworeg ridge without covariance
/// regularization, one model per target, pooling squared errors over all
/// targets into a single out-of-sample r^2 per (method, lambda).
RealStudyResult run_real_study(const std::vector<PriceSeries>& series,
                               const std::vector<double>& lambda_grid,
                               const BootstrapConfig& bootstrap, const RealStudyOptions& options,
                               int workers = 1);

}  // namespace tworeg
