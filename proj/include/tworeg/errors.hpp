#pragma once

#include <stdexcept>
#include <string>

namespace tworeg {

enum class ErrorCode {
    // validation
    InvalidPenalty,
    InvalidShrinkage,
    InvalidConfig,
    UnsupportedConfig,
    // data
    TickerNotFound,
    ParseError,
    InsufficientData,
    FileNotFound,
    // numerical
    RankDeficient,
    DimensionMismatch,
    NotSymmetric,
    NotPositiveSemidefinite,
    SingularCovariance,
    SingularPenaltySystem,
    BootstrapDegenerate,
    DegeneratePrior,
    DegenerateNormalization,
    SelectionFoldFailure,
    DegenerateR2,
};

enum class ErrorCategory { Validation, Data, Numerical };

constexpr ErrorCategory category_of(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidPenalty:
        case ErrorCode::InvalidShrinkage:
        case ErrorCode::InvalidConfig:
        case ErrorCode::UnsupportedConfig:
            return ErrorCategory::Validation;
        case ErrorCode::TickerNotFound:
        case ErrorCode::ParseError:
        case ErrorCode::InsufficientData:
        case ErrorCode::FileNotFound:
            return ErrorCategory::Data;
        default:
            return ErrorCategory::Numerical;
    }
}

constexpr const char* name_of(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidPenalty: return "InvalidPenalty";
        case ErrorCode::InvalidShrinkage: return "InvalidShrinkage";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::UnsupportedConfig: return "UnsupportedConfig";
        case ErrorCode::TickerNotFound: return "TickerNotFound";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::FileNotFound: return "FileNotFound";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NotSymmetric: return "NotSymmetric";
        case ErrorCode::NotPositiveSemidefinite: return "NotPositiveSemidefinite";
        case ErrorCode::SingularCovariance: return "SingularCovariance";
        case ErrorCode::SingularPenaltySystem: return "SingularPenaltySystem";
        case ErrorCode::BootstrapDegenerate: return "BootstrapDegenerate";
        case ErrorCode::DegeneratePrior: return "DegeneratePrior";
        case ErrorCode::DegenerateNormalization: return "DegenerateNormalization";
        case ErrorCode::SelectionFoldFailure: return "SelectionFoldFailure";
        case ErrorCode::DegenerateR2: return "DegenerateR2";
    }
    return "Unknown";
}

/// Library-wide exception. `code` identifies the failure, `what()` carries
/// the code name plus a human-readable message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(name_of(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    ErrorCategory category() const noexcept { return category_of(code_); }

private:
    ErrorCode code_;
};

}  // namespace tworeg
