#include "surfconv/error.h"

namespace surfconv {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kTooFewDistinctDepths: return "TooFewDistinctDepths";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kDegenerateDepth: return "DegenerateDepth";
    case ErrorCode::kStateError: return "StateError";
    case ErrorCode::kAllPixelsIgnored: return "AllPixelsIgnored";
    case ErrorCode::kDivergedLoss: return "DivergedLoss";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kEmptyMatrix: return "EmptyMatrix";
    case ErrorCode::kEmptyCloud: return "EmptyCloud";
    case ErrorCode::kGridTooLarge: return "GridTooLarge";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kParse: return "ParseError";
  }
  return "Unknown";
}

}  // namespace surfconv
