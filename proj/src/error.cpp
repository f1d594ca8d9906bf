#include "rvosfuse/error.hpp"

namespace rvos {

std::string_view ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMalformedRle: return "MalformedRle";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kSequenceMismatch: return "SequenceMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kEmptyTrack: return "EmptyTrack";
    case ErrorCode::kNTooLarge: return "NTooLarge";
    case ErrorCode::kInconsistentSet: return "InconsistentSet";
    case ErrorCode::kMissingPrediction: return "MissingPrediction";
    case ErrorCode::kConflictingAnnotation: return "ConflictingAnnotation";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kPropagatorFailure: return "PropagatorFailure";
    case ErrorCode::kUsage: return "Usage";
  }
  return "Unknown";
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage:
    case ErrorCode::kInvalidArgument:
      return kExitUsage;
    case ErrorCode::kPropagatorFailure:
      return kExitAdapter;
    default:
      return kExitData;
  }
}

}  // namespace rvos
