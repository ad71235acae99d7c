#include "cuprof/error.hpp"

namespace cuprof {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::WrongFieldCount: return "WrongFieldCount";
    case ErrorCode::NonNumericField: return "NonNumericField";
    case ErrorCode::EmptyPath: return "EmptyPath";
    case ErrorCode::PreEpochTimestamp: return "PreEpochTimestamp";
    case ErrorCode::MalformedIp: return "MalformedIp";
    case ErrorCode::BatchRejected: return "BatchRejected";
    case ErrorCode::DatasetTooShort: return "DatasetTooShort";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingleClassTraining: return "SingleClassTraining";
    case ErrorCode::MissingLabel: return "MissingLabel";
    case ErrorCode::InsufficientDays: return "InsufficientDays";
    case ErrorCode::TooFewNegativeUsers: return "TooFewNegativeUsers";
    case ErrorCode::NoOutlierData: return "NoOutlierData";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::WeekTooSparse: return "WeekTooSparse";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::InsufficientSpan: return "InsufficientSpan";
    case ErrorCode::CurveTooShort: return "CurveTooShort";
    case ErrorCode::SourceTooShort: return "SourceTooShort";
    case ErrorCode::ZeroVarianceSeries: return "ZeroVarianceSeries";
    case ErrorCode::NoMatches: return "NoMatches";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::ZeroRange: return "ZeroRange";
    case ErrorCode::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::AllZeroSeries: return "AllZeroSeries";
    case ErrorCode::SeriesTooShortForLag: return "SeriesTooShortForLag";
    case ErrorCode::UndefinedMetric: return "UndefinedMetric";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
  }
  return "Unknown";
}

ErrorFamily family_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidSpec:
      return ErrorFamily::Config;
    case ErrorCode::ZeroVariance:
    case ErrorCode::ZeroVarianceSeries:
    case ErrorCode::NoMatches:
    case ErrorCode::ZeroRange:
    case ErrorCode::AllZeroSeries:
    case ErrorCode::UndefinedMetric:
      return ErrorFamily::Numeric;
    default:
      return ErrorFamily::Data;
  }
}

}  // namespace cuprof
