#include "tworeg/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

namespace tworeg {

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

namespace {

std::string format_fixed(double value, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream file(path);
    if (!file) throw Error(ErrorCode::FileNotFound, "cannot write '" + path + "'");
    return file;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw Error(ErrorCode::FileNotFound, "cannot read '" + path + "'");
    return file;
}

}  // namespace

void write_matrix_txt(const std::string& path, const Eigen::MatrixXd& matrix) {
    auto file = open_out(path);
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
        for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
            if (j > 0) file << ' ';
            file << format_double(matrix(i, j));
        }
        file << '\n';
    }
}

Eigen::MatrixXd read_matrix_txt(const std::string& path) {
    auto file = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    long line_number = 0;
    while (std::getline(file, line)) {
        ++line_number;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::vector<double> row;
        double value = 0.0;
        while (ss >> value) row.push_back(value);
        if (!ss.eof()) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line_number) + ": unparsable matrix entry");
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line_number) + ": ragged matrix row");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorCode::ParseError, "empty matrix file");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

void write_dataset_csv(const std::string& path, const Dataset& data,
                       const std::string& response_col) {
    auto file = open_out(path);
    file << response_col;
    for (Eigen::Index j = 0; j < data.p(); ++j) file << ",x" << (j + 1);
    file << '\n';
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        file << format_double(data.response()(i));
        for (Eigen::Index j = 0; j < data.p(); ++j) {
            file << ',' << format_double(data.design()(i, j));
        }
        file << '\n';
    }
}

Dataset read_dataset_csv(const std::string& path, const std::string& response_col) {
    auto file = open_in(path);
    std::string line;
    if (!std::getline(file, line)) throw Error(ErrorCode::ParseError, "empty dataset file");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            header.push_back(field);
        }
    }
    int response_index = -1;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == response_col) response_index = static_cast<int>(j);
    }
    if (response_index < 0) {
        throw Error(ErrorCode::ParseError, "missing response column '" + response_col + "'");
    }
    if (header.size() < 2) {
        throw Error(ErrorCode::ParseError, "dataset needs at least one covariate column");
    }

    std::vector<std::vector<double>> rows;
    long line_number = 1;
    while (std::getline(file, line)) {
        ++line_number;
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<double> row;
        while (std::getline(ss, field, ',')) {
            try {
                row.push_back(std::stod(field));
            } catch (const std::exception&) {
                throw Error(ErrorCode::ParseError, "line " + std::to_string(line_number) +
                                                       ": unparsable value '" + field + "'");
            }
        }
        if (row.size() != header.size()) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line_number) + ": wrong field count");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorCode::ParseError, "dataset has no data rows");

    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index p = static_cast<Eigen::Index>(header.size()) - 1;
    Eigen::MatrixXd design(n, p);
    Eigen::VectorXd response(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index col = 0;
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (static_cast<int>(j) == response_index) {
                response(i) = rows[static_cast<std::size_t>(i)][j];
            } else {
                design(i, col++) = rows[static_cast<std::size_t>(i)][j];
            }
        }
    }
    return Dataset(std::move(design), std::move(response));
}

std::string study_results_csv(const std::vector<StudyResult>& rows) {
    std::ostringstream out;
    out << "method,lambda,kappa,mu,mean_sq_error,std_error,mean_beta1_sq,beta1_sq_std_error,"
           "mean_beta_sq_total,replicates\n";
    for (const auto& row : rows) {
        out << to_string(row.method) << ',' << format_double(row.lambda) << ','
            << format_double(row.kappa) << ',' << format_double(row.mu) << ','
            << format_double(row.mean_sq_error) << ',' << format_double(row.std_error) << ','
            << format_double(row.mean_beta1_sq) << ','
            << format_double(row.beta1_sq_std_error) << ','
            << format_double(row.mean_beta_sq_total) << ',' << row.replicates << '\n';
    }
    return out.str();
}

namespace {

struct TableLayout {
    std::vector<std::pair<double, double>> columns;             // (mu, kappa)
    std::vector<StudyMethod> methods;
    // best row per (method, column); -1 when not applicable
    std::vector<std::vector<int>> cell_of;
};

TableLayout layout_table(const std::vector<StudyResult>& rows) {
    TableLayout layout;
    for (const auto& row : rows) {
        if (std::find(layout.methods.begin(), layout.methods.end(), row.method) ==
            layout.methods.end()) {
            layout.methods.push_back(row.method);
        }
        if (row.method == StudyMethod::TworegRidge) {
            const auto col = std::make_pair(row.mu, row.kappa);
            if (std::find(layout.columns.begin(), layout.columns.end(), col) ==
                layout.columns.end()) {
                layout.columns.push_back(col);
            }
        }
    }
    if (layout.columns.empty()) layout.columns.emplace_back(0.0, 0.0);

    layout.cell_of.assign(layout.methods.size(),
                          std::vector<int>(layout.columns.size(), -1));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const auto m = static_cast<std::size_t>(
            std::find(layout.methods.begin(), layout.methods.end(), row.method) -
            layout.methods.begin());
        std::size_t c = 0;
        if (row.method == StudyMethod::TworegRidge) {
            c = static_cast<std::size_t>(
                std::find(layout.columns.begin(), layout.columns.end(),
                          std::make_pair(row.mu, row.kappa)) -
                layout.columns.begin());
        }
        int& slot = layout.cell_of[m][c];
        if (slot < 0 || row.mean_sq_error < rows[static_cast<std::size_t>(slot)].mean_sq_error) {
            slot = static_cast<int>(i);
        }
    }
    return layout;
}

std::string render_table(const std::vector<StudyResult>& rows, bool beta1_view) {
    const TableLayout layout = layout_table(rows);
    std::ostringstream out;
    const int width = 26;
    out << std::left;
    auto pad = [&](const std::string& s) {
        std::string padded = s;
        if (padded.size() < static_cast<std::size_t>(width)) {
            padded.append(static_cast<std::size_t>(width) - padded.size(), ' ');
        }
        return padded;
    };

    out << pad("method");
    for (const auto& [mu, kappa] : layout.columns) {
        out << pad("mu=" + format_fixed(mu, 1) + " k=" + format_fixed(kappa, 1));
    }
    out << '\n';
    for (std::size_t m = 0; m < layout.methods.size(); ++m) {
        const StudyMethod method = layout.methods[m];
        out << pad(to_string(method));
        for (std::size_t c = 0; c < layout.columns.size(); ++c) {
            const int idx = layout.cell_of[m][c];
            if (idx < 0 || (method != StudyMethod::TworegRidge && c > 0)) {
                out << pad("N/R");
                continue;
            }
            const StudyResult& cell = rows[static_cast<std::size_t>(idx)];
            char lambda_text[32];
            std::snprintf(lambda_text, sizeof(lambda_text), "%.3g", cell.lambda);
            std::string text;
            if (beta1_view) {
                text = format_fixed(cell.mean_beta1_sq, 4) + " (" +
                       format_fixed(cell.mean_beta_sq_total, 3) + ")";
            } else {
                text = format_fixed(cell.mean_sq_error, 4) + " (" +
                       format_fixed(cell.std_error, 4) + ")";
            }
            out << pad(text + " l=" + lambda_text);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace

std::string format_study_table(const std::vector<StudyResult>& rows) {
    return render_table(rows, false);
}

std::string format_beta1_table(const std::vector<StudyResult>& rows) {
    return render_table(rows, true);
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
    std::ostringstream out;
    out << "method,lambda,r2\n";
    for (const auto& point : curve) {
        out << point.method << ',' << format_double(point.lambda) << ','
            << format_double(point.r2) << '\n';
    }
    return out.str();
}

std::string real_summary_json(const RealStudyResult& result) {
    nlohmann::json j;
    nlohmann::json peaks;
    for (const char* method : {"standard_ridge", "tworeg_ridge", "tworeg_ridge_raw"}) {
        double best_r2 = -std::numeric_limits<double>::infinity();
        double best_lambda = 0.0;
        for (const auto& point : result.curve) {
            if (point.method == method && point.r2 > best_r2) {
                best_r2 = point.r2;
                best_lambda = point.lambda;
            }
        }
        peaks[method] = {{"r2", best_r2}, {"lambda", best_lambda}};
    }
    j["peaks"] = peaks;
    nlohmann::json selections = nlohmann::json::array();
    for (const auto& sel : result.selections) {
        selections.push_back({{"ticker", sel.ticker}, {"kappa", sel.kappa}, {"mu", sel.mu}});
    }
    j["selected_shrinkage"] = selections;
    return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
    auto file = open_out(path);
    file << content;
}

std::string read_text_file(const std::string& path) {
    auto file = open_in(path);
    std::ostringstream ss;
    ss << file.rdbuf();
    return ss.str();
}

void write_coefficients(const std::string& path, const Coefficients& coefficients,
                        const std::vector<std::pair<std::string, std::string>>& metadata) {
    auto file = open_out(path);
    file << "estimator " << to_string(coefficients.estimator_kind) << '\n';
    file << "lambda " << format_double(coefficients.lambda) << '\n';
    for (const auto& [key, value] : metadata) file << key << ' ' << value << '\n';
    for (Eigen::Index i = 0; i < coefficients.values.size(); ++i) {
        file << format_double(coefficients.values(i)) << '\n';
    }
}

}  // namespace tworeg
