#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ocpvars {

enum class ErrorCode {
  kInvalidName,
  kInvalidComposition,
  kDuplicateName,
  kUnknownPath,
  kAmbiguous,
  kIndexOutOfRange,
  kArity,
  kSizeMismatch,
  kKindMismatch,
  kDomain,
  kEvaluation,
  kValidation,
  kIo,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when a bypassed query matches more than one chain; `candidates`
/// lists the conflicting chains as slash-separated names.
class AmbiguityError : public Error {
 public:
  AmbiguityError(const std::string& message, std::vector<std::string> candidates)
      : Error(ErrorCode::kAmbiguous, message), candidates_(std::move(candidates)) {}

  const std::vector<std::string>& candidates() const noexcept { return candidates_; }

 private:
  std::vector<std::string> candidates_;
};

}  // namespace ocpvars
