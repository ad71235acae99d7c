#pragma once

#include <stdexcept>
#include <string>

namespace cuprof {

enum class ErrorCode {
  // ingest
  WrongFieldCount,
  NonNumericField,
  EmptyPath,
  PreEpochTimestamp,
  MalformedIp,
  BatchRejected,
  // features
  DatasetTooShort,
  EmptyCorpus,
  DimensionMismatch,
  // classifiers
  SingleClassTraining,
  MissingLabel,
  InsufficientDays,
  TooFewNegativeUsers,
  NoOutlierData,
  EmptyInput,
  WeekTooSparse,
  // som / drift
  ZeroVariance,
  InsufficientSpan,
  CurveTooShort,
  SourceTooShort,
  // timeseries
  ZeroVarianceSeries,
  NoMatches,
  SeriesTooShort,
  ZeroRange,
  EmptyEnsemble,
  AllZeroSeries,
  SeriesTooShortForLag,
  UndefinedMetric,
  // plumbing
  InvalidSpec,
  ConfigError,
  IoError,
  FormatError,
};

const char* to_string(ErrorCode code);

/// Coarse family used for CLI exit codes.
enum class ErrorFamily { Config, Data, Numeric };
ErrorFamily family_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cuprof
