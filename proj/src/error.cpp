#include "ocpvars/error.hpp"

namespace ocpvars {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidName: return "invalid-name";
    case ErrorCode::kInvalidComposition: return "invalid-composition";
    case ErrorCode::kDuplicateName: return "duplicate-name";
    case ErrorCode::kUnknownPath: return "unknown-path";
    case ErrorCode::kAmbiguous: return "ambiguity";
    case ErrorCode::kIndexOutOfRange: return "index-out-of-range";
    case ErrorCode::kArity: return "arity";
    case ErrorCode::kSizeMismatch: return "size-mismatch";
    case ErrorCode::kKindMismatch: return "kind-mismatch";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kEvaluation: return "evaluation";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace ocpvars
