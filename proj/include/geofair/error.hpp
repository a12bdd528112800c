#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geofair {

/// Failure categories raised by the library. The CLI maps every one of these
/// to the data/validation exit code; usage errors are handled before the
/// library is ever called.
enum class ErrorCode {
  FileNotFound,
  IoError,
  SchemaMismatch,
  RowInvalid,
  DuplicateId,
  EmptyDataset,
  InvalidConfig,
  SingleState,
  TooFewStates,
  RankDeficient,
  InsufficientData,
  ConstantTarget,
  AllTreatment,
  AllControl,
  MissingFeature,
  MissingTarget,
  RefusesTrainTestOverlap,
  InvalidArgument,
  ModelFormat,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace geofair
