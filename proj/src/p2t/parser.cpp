#include "p2t/parser.hpp"

#include "p2t/io.hpp"

namespace p2t {

const char* outcome_kind_name(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::kExtracted: return "Extracted";
    case OutcomeKind::kOutOfContext: return "OutOfContext";
    case OutcomeKind::kUnparseable: return "Unparseable";
  }
  return "Unparseable";
}

std::optional<OutcomeKind> outcome_kind_from(std::string_view name) {
  if (name == "Extracted") return OutcomeKind::kExtracted;
  if (name == "OutOfContext") return OutcomeKind::kOutOfContext;
  if (name == "Unparseable") return OutcomeKind::kUnparseable;
  return std::nullopt;
}

ExtractionOutcome ExtractionOutcome::unparseable(std::string raw, std::string note) {
  ExtractionOutcome o;
  o.kind = OutcomeKind::kUnparseable;
  o.raw_text = std::move(raw);
  o.justification = std::move(note);
  return o;
}

CueList::CueList()
    : CueList({"out of context", "outside the predefined", "no matching relation", "does not match any"}) {}

CueList::CueList(std::vector<std::string> phrases) {
  for (auto& p : phrases) {
    auto t = trim(p);
    if (!t.empty()) phrases_.push_back(ascii_lower(t));
  }
}

CueList CueList::load(const std::filesystem::path& path) {
  std::string text = read_file(path);
  std::vector<std::string> lines;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return CueList(std::move(lines));
}

bool CueList::matches(std::string_view text) const {
  std::string lowered = ascii_lower(text);
  for (const auto& p : phrases_) {
    if (lowered.find(p) != std::string::npos) return true;
  }
  return false;
}

namespace {

std::string quote(std::string_view field) {
  std::string out = "'";
  for (char c : field) {
    if (c == '\'') out += '\'';
    out += c;
  }
  out += '\'';
  return out;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

class TupleScanner {
 public:
  explicit TupleScanner(std::string_view text) : text_(text) {}

  // Attempts a tuple starting at the '(' at `open`.
  std::optional<std::vector<std::string>> tuple_at(size_t open) {
    pos_ = open + 1;
    std::vector<std::string> terms;
    while (true) {
      skip_space();
      auto term = quoted_term();
      if (!term) return std::nullopt;
      terms.push_back(std::move(*term));
      skip_space();
      if (pos_ >= text_.size()) return std::nullopt;
      char c = text_[pos_++];
      if (c == ')') break;
      if (c != ',') return std::nullopt;
      if (terms.size() >= 4) return std::nullopt;
    }
    if (terms.size() < 3) return std::nullopt;
    for (const auto& t : terms) {
      if (trim(t).empty()) return std::nullopt;
    }
    return terms;
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }

  // A doubled quote is a literal quote. A lone quote closes the term only when
  // the next non-space character is ',' or ')'; otherwise it is kept as an
  // apostrophe ("my wife's").
  std::optional<std::string> quoted_term() {
    if (pos_ >= text_.size()) return std::nullopt;
    char q = text_[pos_];
    if (q != '\'' && q != '"') return std::nullopt;
    ++pos_;
    std::string out;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c != q) {
        out += c;
        ++pos_;
        continue;
      }
      if (pos_ + 1 < text_.size() && text_[pos_ + 1] == q) {
        out += q;
        pos_ += 2;
        continue;
      }
      size_t look = pos_ + 1;
      while (look < text_.size() && is_space(text_[look])) ++look;
      if (look < text_.size() && (text_[look] == ',' || text_[look] == ')')) {
        ++pos_;
        return out;
      }
      out += c;
      ++pos_;
    }
    return std::nullopt;
  }

  std::string_view text_;
  size_t pos_ = 0;
};

}  // namespace

std::string serialize_triple(const Triple& t) {
  return "(" + quote(t.subject) + ", " + quote(t.predicate) + ", " + quote(t.object) + ")";
}

std::string serialize_quadruple(const RawQuadruple& q) {
  std::string out = "(" + quote(q.subject) + ", " + quote(q.predicate) + ", " + quote(q.object);
  if (q.relation) out += ", " + quote(*q.relation);
  return out + ")";
}

ParsedResponse parse_response(std::string_view raw, const CueList& cues) {
  ParsedResponse out;
  out.raw_text = std::string(raw);
  TupleScanner scanner(raw);
  for (size_t i = raw.find('('); i != std::string_view::npos; i = raw.find('(', i + 1)) {
    auto terms = scanner.tuple_at(i);
    if (!terms) continue;
    RawQuadruple quad{std::move((*terms)[0]), std::move((*terms)[1]), std::move((*terms)[2]), std::nullopt};
    if (terms->size() == 4) quad.relation = std::move((*terms)[3]);
    out.kind = OutcomeKind::kExtracted;
    out.quad = std::move(quad);
    return out;
  }
  if (cues.matches(raw)) {
    out.kind = OutcomeKind::kOutOfContext;
    out.justification = trim(raw);
  } else {
    out.kind = OutcomeKind::kUnparseable;
  }
  return out;
}

ExtractionOutcome apply_relation_postprocess(const RawQuadruple& quad, const Vocabulary& vocab) {
  ExtractionOutcome out;
  out.raw_text = serialize_quadruple(quad);
  if (quad.relation) {
    const Relation* rel = vocab.find(trim(*quad.relation));
    if (rel == nullptr) {
      out.kind = OutcomeKind::kOutOfContext;
      out.justification = "relation '" + *quad.relation + "' is not in the vocabulary";
      return out;
    }
    out.kind = OutcomeKind::kExtracted;
    out.triple = Triple{quad.subject, rel->name, quad.object};
    return out;
  }
  out.kind = OutcomeKind::kExtracted;
  out.triple = Triple{quad.subject, quad.predicate, quad.object};
  return out;
}

ExtractionOutcome extract_outcome(std::string_view raw, const Vocabulary& vocab, const CueList& cues) {
  ParsedResponse parsed = parse_response(raw, cues);
  ExtractionOutcome out;
  if (parsed.kind == OutcomeKind::kExtracted) {
    out = apply_relation_postprocess(*parsed.quad, vocab);
  } else {
    out.kind = parsed.kind;
    out.justification = std::move(parsed.justification);
  }
  out.raw_text = std::move(parsed.raw_text);
  return out;
}

}  // namespace p2t
