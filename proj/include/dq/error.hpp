#pragma once

#include <stdexcept>
#include <string>

namespace dq {

enum class ErrorCode {
    MalformedCsv,
    SchemaMismatch,
    BadTimestamp,
    ShapeMismatch,
    EmptyTable,
    BadFactor,
    BadClusterIndex,
    MissingRowMeta,
    DegenerateAge,
    EmptyLexicon,
    NoAccessData,
    MissingMetric,
    MissingAspect,
    WindowTooLarge,
    EmptyTrainingSet,
    SingleClassTraining,
    MissingSourceRank,
    EmptyData,
    DimensionMismatch,
    AllZeroWeights,
    TruthMismatch,
    NoFeatures,
    EmptyTraining,
    StaleReport,
    WeightMismatch,
    RateConflict,
    BadConfig,
    IoError,
};

const char* to_string(ErrorCode code);

/// All engine failures surface as DqError; `code()` identifies the contract
/// violation so callers (and the CLI) can map it to an exit status.
class DqError : public std::runtime_error {
public:
    DqError(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw DqError(code, message);
}

}  // namespace dq
