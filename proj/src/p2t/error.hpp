#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace p2t {

enum class Errc {
  kInvalidArgument,
  kIo,
  kSchema,
  kDuplicateId,
  kEmptyVocabulary,
  kEmptyPrompt,
  kMissingExamples,
  kMissingGroundTruth,
  kTemplate,
  kInfeasibleSplit,
  kMissingSplit,
  kGoldRelationUnknown,
  kNoEvaluatedRecords,
  kPairingMismatch,
  kNetwork,
  kHttpStatus,
  kMalformedResponse,
  kRateLimited,
  kTapeMiss,
};

const char* errc_name(Errc code);

// Every failure in the core is reported as an Error. The optional fields
// carry the structured payload of the variants that need one.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message) : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

  // Retryable backend failures.
  bool transient() const noexcept { return code_ == Errc::kRateLimited || code_ == Errc::kNetwork; }

  int http_status = 0;
  long line = 0;                 // 1-based line for Schema errors
  std::string detail;            // relation, tape key, field name, ...
  std::vector<std::string> ids;  // offending ids for PairingMismatch

 private:
  Errc code_;
};

}  // namespace p2t
