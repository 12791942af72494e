#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "p2t/core_model.hpp"

namespace p2t {

struct RawQuadruple {
  std::string subject;
  std::string predicate;
  std::string object;
  std::optional<std::string> relation;

  friend bool operator==(const RawQuadruple&, const RawQuadruple&) = default;
};

enum class OutcomeKind { kExtracted, kOutOfContext, kUnparseable };

const char* outcome_kind_name(OutcomeKind kind);
std::optional<OutcomeKind> outcome_kind_from(std::string_view name);

// Result of scanning a completion, before relation post-processing.
struct ParsedResponse {
  OutcomeKind kind = OutcomeKind::kUnparseable;
  std::optional<RawQuadruple> quad;  // present iff kind == kExtracted
  std::string justification;         // OutOfContext only
  std::string raw_text;
};

struct ExtractionOutcome {
  OutcomeKind kind = OutcomeKind::kUnparseable;
  std::optional<Triple> triple;  // present iff kind == kExtracted
  std::string justification;     // OutOfContext only
  std::string raw_text;

  static ExtractionOutcome unparseable(std::string raw, std::string note = {});
};

// Case-insensitive substring phrases marking an out-of-scope answer.
class CueList {
 public:
  CueList();  // default phrases
  explicit CueList(std::vector<std::string> phrases);

  // Plain text, one phrase per line; blank lines ignored.
  static CueList load(const std::filesystem::path& path);

  bool matches(std::string_view text) const;
  const std::vector<std::string>& phrases() const { return phrases_; }

 private:
  std::vector<std::string> phrases_;  // lowercased
};

// ('subject', 'predicate', 'object') with embedded single quotes doubled.
std::string serialize_triple(const Triple& t);
std::string serialize_quadruple(const RawQuadruple& q);

// Finds the first parenthesized tuple of 3 or 4 quoted terms anywhere in the
// text. Never throws; failure is encoded in the kind.
ParsedResponse parse_response(std::string_view raw, const CueList& cues = CueList());

ExtractionOutcome apply_relation_postprocess(const RawQuadruple& quad, const Vocabulary& vocab);

// parse_response followed by apply_relation_postprocess, keeping raw_text.
ExtractionOutcome extract_outcome(std::string_view raw, const Vocabulary& vocab, const CueList& cues = CueList());

}  // namespace p2t
