#pragma once

#include <string>
#include <vector>

#include "tworeg/realdata.hpp"
#include "tworeg/simulation.hpp"
#include "tworeg/types.hpp"

namespace tworeg {

/// Full-precision decimal rendering (round-trips doubles exactly).
std::string format_double(double value);

/// Plain-text matrix format: one row per line, space-separated, full
/// precision.
void write_matrix_txt(const std::string& path, const Eigen::MatrixXd& matrix);
Eigen::MatrixXd read_matrix_txt(const std::string& path);

/// Dataset CSV: header row, one response column (default "y"), every other
/// column a covariate, in header order.
void write_dataset_csv(const std::string& path, const Dataset& data,
                       const std::string& response_col = "y");
Dataset read_dataset_csv(const std::string& path, const std::string& response_col = "y");

std::string study_results_csv(const std::vector<StudyResult>& rows);

/// Text table in the simulation-study layout: one row per method, one
/// column per (mu, kappa) grid point, each cell showing the mean squared
/// estimation error (standard error) at the error-minimizing lambda.
std::string format_study_table(const std::vector<StudyResult>& rows);

/// Companion table reporting mean beta_1^2 (and in parentheses the mean of
/// ||beta||^2) at the same lambda.
std::string format_beta1_table(const std::vector<StudyResult>& rows);

std::string curve_csv(const std::vector<CurvePoint>& curve);

std::string real_summary_json(const RealStudyResult& result);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

void write_coefficients(
    const std::string& path, const Coefficients& coefficients,
    const std::vector<std::pair<std::string, std::string>>& metadata = {});

}  // namespace tworeg
