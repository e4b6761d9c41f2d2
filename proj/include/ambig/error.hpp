#pragma once

#include <stdexcept>
#include <string>

namespace ambig {

enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    InvalidModel,
    InvalidClaim,
    ConfigInvalid,
    NonAxisAligned,
    PicardNonConvergence,
    PenaltyStagnation,
    Unsupported,
    IllConditioned,
    Refused,
    BracketFailure,
    OutOfHull,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::DimensionMismatch: return "dimension-mismatch";
        case ErrorCode::InvalidModel: return "invalid-model";
        case ErrorCode::InvalidClaim: return "invalid-claim";
        case ErrorCode::ConfigInvalid: return "config-invalid";
        case ErrorCode::NonAxisAligned: return "non-axis-aligned";
        case ErrorCode::PicardNonConvergence: return "picard-non-convergence";
        case ErrorCode::PenaltyStagnation: return "penalty-stagnation";
        case ErrorCode::Unsupported: return "unsupported";
        case ErrorCode::IllConditioned: return "ill-conditioned";
        case ErrorCode::Refused: return "refused";
        case ErrorCode::BracketFailure: return "bracket-failure";
        case ErrorCode::OutOfHull: return "out-of-hull";
    }
    return "unknown";
}

/// Single exception type for the library; the code says which contract broke.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

    ErrorCode code() const noexcept { return code_; }
    /// The message without the code prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace ambig
