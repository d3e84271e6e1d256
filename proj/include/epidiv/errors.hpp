#pragma once

#include <stdexcept>
#include <string>

namespace epidiv {

enum class ErrorCode {
    BackendUnavailable,
    AuthError,
    ResponseMalformed,
    EmptyBatch,
    DimMismatch,
    MissingPlaceholder,
    MissingLabel,
    EmptyAbundance,
    TargetUnreachable,
    DistributionInvalid,
    NoParagraphs,
    MetadataMissing,
    ConfigError,
    CheckpointMissing,
    IoError,
};

const char* error_code_name(ErrorCode code);

class EpidivError : public std::runtime_error {
public:
    EpidivError(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace epidiv
