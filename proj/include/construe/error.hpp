#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace construe {

// Error codes shared by the C++ core and the C API. The numeric values are
// part of the C ABI (see construe.h), so only append.
enum class ErrorCode {
  Ok = 0,
  EmptyInput,
  MissingFile,
  SchemaViolation,
  DanglingReference,
  UnknownLemma,
  InvalidFeatures,
  UnknownToken,
  RecipeFailed,
  GenerationGap,
  UnknownExercise,
  OutOfOrderAttempt,
  Degenerate,
  EmptyPool,
  NoLevel,
  EmptyBank,
  UnknownLearner,
  UnsupportedLanguage,
  EmptyText,
  Forbidden,
  NotFound,
  NoCandidates,
  ExhaustedAttempts,
  Unauthorized,
  BadRequest,
  Io,
  Internal,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace construe
