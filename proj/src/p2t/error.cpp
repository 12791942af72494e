#include "p2t/error.hpp"

namespace p2t {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kIo: return "Io";
    case Errc::kSchema: return "Schema";
    case Errc::kDuplicateId: return "DuplicateId";
    case Errc::kEmptyVocabulary: return "EmptyVocabulary";
    case Errc::kEmptyPrompt: return "EmptyPrompt";
    case Errc::kMissingExamples: return "MissingExamples";
    case Errc::kMissingGroundTruth: return "MissingGroundTruth";
    case Errc::kTemplate: return "Template";
    case Errc::kInfeasibleSplit: return "Infeasible";
    case Errc::kMissingSplit: return "MissingSplit";
    case Errc::kGoldRelationUnknown: return "GoldRelationUnknown";
    case Errc::kNoEvaluatedRecords: return "NoEvaluatedRecords";
    case Errc::kPairingMismatch: return "PairingMismatch";
    case Errc::kNetwork: return "Network";
    case Errc::kHttpStatus: return "HttpStatus";
    case Errc::kMalformedResponse: return "MalformedResponse";
    case Errc::kRateLimited: return "RateLimited";
    case Errc::kTapeMiss: return "TapeMiss";
  }
  return "Unknown";
}

}  // namespace p2t
