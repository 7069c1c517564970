#pragma once

#include <stdexcept>
#include <string>

namespace fedadmm {

enum class ErrorCode {
    DimensionMismatch,
    NotSymmetric,
    FactorizationFailure,
    NoConvergence,
    LabelDomain,
    InvalidMode,
    InvalidGroups,
    InvalidRange,
    ParseError,
    TooManyClients,
    NonPositiveSigma,
    InnerSolveFailure,
    NonFiniteIterate,
    SingularSystem,
    HypothesisViolation,
    ConfigError,
};

const char* error_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace fedadmm
