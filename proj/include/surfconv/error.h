#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace surfconv {

enum class ErrorCode {
  kNonPositiveDepth,
  kDimensionMismatch,
  kShapeMismatch,
  kTooFewDistinctDepths,
  kEmptyInput,
  kTooFewSamples,
  kDegenerateDepth,
  kStateError,
  kAllPixelsIgnored,
  kDivergedLoss,
  kLabelOutOfRange,
  kEmptyMatrix,
  kEmptyCloud,
  kGridTooLarge,
  kInvalidArgument,
  kIo,
  kParse,
};

// Stable identifier used in CLI error lines, e.g. "NonPositiveDepth".
std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace surfconv
