#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rvos {

enum class ErrorCode {
  kInvalidArgument,
  kMalformedRle,
  kDimensionMismatch,
  kSequenceMismatch,
  kEmptyInput,
  kEmptyTrack,
  kNTooLarge,
  kInconsistentSet,
  kMissingPrediction,
  kConflictingAnnotation,
  kNotFound,
  kParseError,
  kPropagatorFailure,
  kUsage,
};

std::string_view ToString(ErrorCode code);

// Every failure raised by the library carries one of the codes above so the
// CLI can map it onto an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ToString(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Exit statuses used by the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitAdapter = 4;

int ExitCodeFor(ErrorCode code);

}  // namespace rvos
