#include "dq/error.hpp"

namespace dq {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedCsv: return "MalformedCsv";
        case ErrorCode::SchemaMismatch: return "SchemaMismatch";
        case ErrorCode::BadTimestamp: return "BadTimestamp";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::EmptyTable: return "EmptyTable";
        case ErrorCode::BadFactor: return "BadFactor";
        case ErrorCode::BadClusterIndex: return "BadClusterIndex";
        case ErrorCode::MissingRowMeta: return "MissingRowMeta";
        case ErrorCode::DegenerateAge: return "DegenerateAge";
        case ErrorCode::EmptyLexicon: return "EmptyLexicon";
        case ErrorCode::NoAccessData: return "NoAccessData";
        case ErrorCode::MissingMetric: return "MissingMetric";
        case ErrorCode::MissingAspect: return "MissingAspect";
        case ErrorCode::WindowTooLarge: return "WindowTooLarge";
        case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
        case ErrorCode::SingleClassTraining: return "SingleClassTraining";
        case ErrorCode::MissingSourceRank: return "MissingSourceRank";
        case ErrorCode::EmptyData: return "EmptyData";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::AllZeroWeights: return "AllZeroWeights";
        case ErrorCode::TruthMismatch: return "TruthMismatch";
        case ErrorCode::NoFeatures: return "NoFeatures";
        case ErrorCode::EmptyTraining: return "EmptyTraining";
        case ErrorCode::StaleReport: return "StaleReport";
        case ErrorCode::WeightMismatch: return "WeightMismatch";
        case ErrorCode::RateConflict: return "RateConflict";
        case ErrorCode::BadConfig: return "BadConfig";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace dq
