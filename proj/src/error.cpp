#include "ima/error.hpp"

namespace ima {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnparseableSentence: return "UNPARSEABLE_SENTENCE";
    case ErrorCode::kUnknownEntity: return "UNKNOWN_ENTITY";
    case ErrorCode::kVocabExhausted: return "VOCAB_EXHAUSTED";
    case ErrorCode::kInvalidSpec: return "INVALID_SPEC";
    case ErrorCode::kIoError: return "IO_ERROR";
    case ErrorCode::kMalformedRecord: return "MALFORMED_RECORD";
    case ErrorCode::kDimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::kShapeMismatch: return "SHAPE_MISMATCH";
    case ErrorCode::kEmptyInput: return "EMPTY_INPUT";
    case ErrorCode::kEmptyContext: return "EMPTY_CONTEXT";
    case ErrorCode::kAllMasked: return "ALL_MASKED";
    case ErrorCode::kIterationOverflow: return "ITERATION_OVERFLOW";
    case ErrorCode::kNonFiniteLoss: return "NON_FINITE_LOSS";
  }
  return "UNKNOWN";
}

}  // namespace ima
