#include "tworeg/realdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "tworeg/estimators.hpp"
#include "tworeg/parallel.hpp"
#include "tworeg/rng.hpp"

namespace tworeg {

namespace {

constexpr int kMinAlignedRows = 30;

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static const int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return lengths[m - 1];
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim surrounding whitespace and an optional CR
        const auto begin = field.find_first_not_of(" \t\r");
        const auto last = field.find_last_not_of(" \t\r");
        fields.push_back(begin == std::string::npos ? ""
                                                    : field.substr(begin, last - begin + 1));
    }
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

}  // namespace

Date Date::parse(const std::string& iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') {
        throw Error(ErrorCode::ParseError, "date must be YYYY-MM-DD, got '" + iso + "'");
    }
    Date d;
    try {
        d.year = std::stoi(iso.substr(0, 4));
        d.month = std::stoi(iso.substr(5, 2));
        d.day = std::stoi(iso.substr(8, 2));
    } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "date must be YYYY-MM-DD, got '" + iso + "'");
    }
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month)) {
        throw Error(ErrorCode::ParseError, "invalid calendar date '" + iso + "'");
    }
    return d;
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

void PriceSeries::validate() const {
    if (static_cast<Eigen::Index>(dates.size()) != closes.size()) {
        throw Error(ErrorCode::DimensionMismatch, "dates and closes must have equal length");
    }
    for (std::size_t i = 0; i < dates.size(); ++i) {
        if (!(closes(static_cast<Eigen::Index>(i)) > 0.0)) {
            throw Error(ErrorCode::ParseError,
                        "nonpositive close for " + ticker + " on " + dates[i].to_string());
        }
        if (i > 0 && !(dates[i - 1] < dates[i])) {
            throw Error(ErrorCode::ParseError,
                        "dates not strictly increasing for " + ticker + " at " +
                            dates[i].to_string());
        }
    }
}

std::vector<PriceSeries> load_prices(const std::string& path,
                                     const std::vector<std::string>& tickers,
                                     const CsvColumns& columns) {
    std::ifstream file(path);
    if (!file) {
        throw Error(ErrorCode::FileNotFound, "cannot open price file '" + path + "'");
    }
    std::string line;
    if (!std::getline(file, line)) {
        throw Error(ErrorCode::ParseError, "empty price file");
    }
    const auto header = split_csv_line(line);
    const auto find_col = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return static_cast<int>(i);
        }
        throw Error(ErrorCode::ParseError, "missing column '" + name + "' in header");
    };
    const int date_col = find_col(columns.date);
    const int symbol_col = find_col(columns.symbol);
    const int close_col = find_col(columns.close);
    const int max_col = std::max({date_col, symbol_col, close_col});

    std::set<std::string> wanted(tickers.begin(), tickers.end());
    std::map<std::string, std::map<Date, double>> rows;
    long line_number = 1;
    while (std::getline(file, line)) {
        ++line_number;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) <= max_col) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line_number) + ": too few columns");
        }
        const std::string& symbol = fields[symbol_col];
        if (wanted.find(symbol) == wanted.end()) continue;
        Date date;
        double close = 0.0;
        try {
            date = Date::parse(fields[date_col]);
            std::size_t consumed = 0;
            close = std::stod(fields[close_col], &consumed);
            if (consumed != fields[close_col].size()) {
                throw Error(ErrorCode::ParseError, "trailing characters in price");
            }
        } catch (const Error& err) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line_number) + ": " + err.what());
        } catch (const std::exception&) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line_number) +
                                                   ": unparsable price '" + fields[close_col] +
                                                   "'");
        }
        if (!(close > 0.0)) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line_number) + ": nonpositive close");
        }
        auto& per_date = rows[symbol];
        if (!per_date.emplace(date, close).second) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line_number) +
                                                   ": duplicate date " + date.to_string() +
                                                   " for " + symbol);
        }
    }

    for (const auto& ticker : tickers) {
        if (rows.find(ticker) == rows.end()) {
            throw Error(ErrorCode::TickerNotFound, "ticker '" + ticker + "' not in file");
        }
    }

    // Align all requested tickers on the intersection of trading dates.
    std::vector<Date> common;
    bool first = true;
    for (const auto& ticker : tickers) {
        const auto& per_date = rows[ticker];
        if (first) {
            for (const auto& [date, close] : per_date) common.push_back(date);
            first = false;
        } else {
            std::vector<Date> next;
            for (const Date& date : common) {
                if (per_date.count(date)) next.push_back(date);
            }
            common.swap(next);
        }
    }
    if (static_cast<int>(common.size()) < kMinAlignedRows) {
        throw Error(ErrorCode::InsufficientData,
                    "only " + std::to_string(common.size()) +
                        " aligned trading dates (need at least " +
                        std::to_string(kMinAlignedRows) + ")");
    }

    std::vector<PriceSeries> out;
    out.reserve(tickers.size());
    for (const auto& ticker : tickers) {
        PriceSeries series;
        series.ticker = ticker;
        series.dates = common;
        series.closes.resize(static_cast<Eigen::Index>(common.size()));
        const auto& per_date = rows[ticker];
        for (std::size_t i = 0; i < common.size(); ++i) {
            series.closes(static_cast<Eigen::Index>(i)) = per_date.at(common[i]);
        }
        series.validate();
        out.push_back(std::move(series));
    }
    return out;
}

ReturnDataset build_return_dataset(const std::vector<PriceSeries>& series,
                                   const std::string& target, SplitTag split, int horizon,
                                   int short_lag, int long_lag) {
    if (series.empty()) {
        throw Error(ErrorCode::InsufficientData, "no price series given");
    }
    if (short_lag < 1 || long_lag < short_lag || horizon < 1) {
        throw Error(ErrorCode::InvalidConfig, "need horizon >= 1 and long_lag >= short_lag >= 1");
    }
    const Eigen::Index len = series.front().closes.size();
    const PriceSeries* target_series = nullptr;
    for (const auto& s : series) {
        if (s.closes.size() != len || s.dates != series.front().dates) {
            throw Error(ErrorCode::DimensionMismatch, "series must be date-aligned");
        }
        if (s.ticker == target) target_series = &s;
    }
    if (!target_series) {
        throw Error(ErrorCode::TickerNotFound, "target '" + target + "' not among series");
    }
    const Eigen::Index rows = len - long_lag - horizon;
    if (rows < 1) {
        throw Error(ErrorCode::InsufficientData, "series too short for the requested lags");
    }

    ReturnDataset out;
    out.target_ticker = target;
    out.split = split;
    out.design.resize(rows, 2 * static_cast<Eigen::Index>(series.size()));
    out.response.resize(rows);
    for (const auto& s : series) {
        out.covariate_names.push_back(s.ticker + "_short");
        out.covariate_names.push_back(s.ticker + "_long");
    }
    const auto log_prices = [](const PriceSeries& s) {
        return s.closes.array().log().matrix().eval();
    };
    const Eigen::VectorXd target_log = log_prices(*target_series);
    for (std::size_t j = 0; j < series.size(); ++j) {
        const Eigen::VectorXd lp = log_prices(series[j]);
        for (Eigen::Index i = 0; i < rows; ++i) {
            const Eigen::Index t = i + long_lag;  // first row with all lags defined
            out.design(i, 2 * static_cast<Eigen::Index>(j)) = lp(t) - lp(t - short_lag);
            out.design(i, 2 * static_cast<Eigen::Index>(j) + 1) = lp(t) - lp(t - long_lag);
        }
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Eigen::Index t = i + long_lag;
        out.response(i) = target_log(t + horizon) - target_log(t);
    }
    return out;
}

double evaluate_r2(const Coefficients& model, const ReturnDataset& test) {
    if (model.values.size() != test.design.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "coefficient length must match covariates");
    }
    const double ssy = test.response.squaredNorm();
    if (!(ssy > 0.0)) {
        throw Error(ErrorCode::DegenerateR2, "test response sum of squares is zero");
    }
    const double sse = (test.response - test.design * model.values).squaredNorm();
    return 1.0 - sse / ssy;
}

std::vector<PriceSeries> restrict_series(const std::vector<PriceSeries>& series,
                                         const Date& boundary, bool keep_before) {
    std::vector<PriceSeries> out;
    out.reserve(series.size());
    for (const auto& s : series) {
        PriceSeries r;
        r.ticker = s.ticker;
        std::vector<Eigen::Index> keep;
        for (std::size_t i = 0; i < s.dates.size(); ++i) {
            const bool ok = keep_before ? !(boundary < s.dates[i]) : !(s.dates[i] < boundary);
            if (ok) keep.push_back(static_cast<Eigen::Index>(i));
        }
        r.dates.reserve(keep.size());
        r.closes.resize(static_cast<Eigen::Index>(keep.size()));
        for (std::size_t i = 0; i < keep.size(); ++i) {
            r.dates.push_back(s.dates[static_cast<std::size_t>(keep[i])]);
            r.closes(static_cast<Eigen::Index>(i)) = s.closes(keep[i]);
        }
        out.push_back(std::move(r));
    }
    return out;
}

double RealStudyResult::peak_r2(const std::string& method) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& point : curve) {
        if (point.method == method) best = std::max(best, point.r2);
    }
    return best;
}

RealStudyResult run_real_study(const std::vector<PriceSeries>& series,
                               const std::vector<double>& lambda_grid,
                               const BootstrapConfig& bootstrap, const RealStudyOptions& options,
                               int workers) {
    if (lambda_grid.empty()) {
        throw Error(ErrorCode::InvalidConfig, "lambda grid must be nonempty");
    }
    const std::vector<PriceSeries> train_series =
        restrict_series(series, options.train_end, true);
    const std::vector<PriceSeries> test_series =
        restrict_series(series, options.test_start, false);
    const std::vector<ShrinkageParams> shrink_grid =
        options.shrink_grid.empty() ? default_shrink_grid() : options.shrink_grid;

    static const char* kMethods[] = {"standard_ridge", "tworeg_ridge", "tworeg_ridge_raw"};
    const std::size_t n_targets = series.size();
    const std::size_t n_lambda = lambda_grid.size();

    // Per target: SSE for each (method, lambda) plus the response sum of squares.
    std::vector<Eigen::MatrixXd> sse(n_targets);
    std::vector<double> ssy(n_targets, 0.0);
    std::vector<TargetSelection> selections(n_targets);

    parallel_for(n_targets, workers, [&](std::size_t t) {
        const std::string& target = series[t].ticker;
        const ReturnDataset train =
            build_return_dataset(train_series, target, SplitTag::Train, options.horizon,
                                 options.short_lag, options.long_lag);
        const ReturnDataset test =
            build_return_dataset(test_series, target, SplitTag::Test, options.horizon,
                                 options.short_lag, options.long_lag);
        const Dataset train_data = train.to_dataset();

        BootstrapConfig boot = bootstrap;
        boot.seed = Rng::derive2(bootstrap.seed, 0x7A26E7ULL, t);
        const CovarianceMatrix crude = block_bootstrap_cov(train_data, boot);
        const CovarianceMatrix prior = prior_cov(train_data.design(), crude);

        const FoldPlan folds = FoldPlan::contiguous(train_data.n(), boot.blocks);
        const ShrinkageParams chosen =
            select_shrinkage(train_data, folds, shrink_grid, boot, CovMetric::Frobenius);
        selections[t] = TargetSelection{target, chosen.kappa, chosen.mu};

        const CovarianceMatrix cov_selected =
            normalize(shrink(crude, prior, chosen), train_data.design());
        const CovarianceMatrix cov_raw =
            normalize(CovarianceMatrix(crude.entries(), CovStage::Shrunk),
                      train_data.design());

        sse[t].resize(3, static_cast<Eigen::Index>(n_lambda));
        ssy[t] = test.response.squaredNorm();
        for (std::size_t li = 0; li < n_lambda; ++li) {
            const double lambda = lambda_grid[li];
            const Coefficients fits[3] = {
                ridge_fit(train_data, lambda),
                tworeg_ridge_fit(train_data, cov_selected, lambda),
                tworeg_ridge_fit(train_data, cov_raw, lambda),
            };
            for (int m = 0; m < 3; ++m) {
                sse[t](m, static_cast<Eigen::Index>(li)) =
                    (test.response - test.design * fits[m].values).squaredNorm();
            }
        }
    });

    RealStudyResult result;
    result.selections = selections;
    double total_ssy = 0.0;
    for (double v : ssy) total_ssy += v;
    if (!(total_ssy > 0.0)) {
        throw Error(ErrorCode::DegenerateR2, "pooled response sum of squares is zero");
    }
    for (int m = 0; m < 3; ++m) {
        for (std::size_t li = 0; li < n_lambda; ++li) {
            double total_sse = 0.0;
            for (std::size_t t = 0; t < n_targets; ++t) {
                total_sse += sse[t](m, static_cast<Eigen::Index>(li));
            }
            result.curve.push_back(
                CurvePoint{kMethods[m], lambda_grid[li], 1.0 - total_sse / total_ssy});
        }
    }
    return result;
}

}  // namespace tworeg
