#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace effeval {

// Values are shared with effeval_status in effeval.h.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kEmptyDocument = 2,
  kDimensionMismatch = 3,
  kNonFiniteValue = 4,
  kZeroVector = 5,
  kSolverFailure = 6,
  kZeroVariance = 7,
  kIo = 8,
  kBadMagic = 9,
  kCrcMismatch = 10,
  kTruncatedPayload = 11,
  kVersionUnsupported = 12,
  kLayoutMismatch = 13,
  kColumnCount = 14,
  kBadScore = 15,
  kParse = 16,
  kMissingPenalty = 17,
  kAlignmentMismatch = 18,
  kProbeUnavailable = 19,
  kNonPositive = 20,
  kPrecondition = 21,
  kBatchVariance = 22,
  kInternal = 23,
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

[[noreturn]] void raise(ErrorCode code, const std::string& message);

}  // namespace effeval
