#include "p2t/core_model.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "p2t/error.hpp"
#include "p2t/io.hpp"

namespace p2t {

Vocabulary::Vocabulary(std::vector<Relation> relations) : relations_(std::move(relations)) {
  if (relations_.empty()) throw Error(Errc::kEmptyVocabulary, "vocabulary has no relations");
  std::set<std::string> seen;
  for (const auto& r : relations_) {
    if (r.name.empty() ||
        std::any_of(r.name.begin(), r.name.end(), [](unsigned char c) { return std::isspace(c); })) {
      throw Error(Errc::kInvalidArgument, "relation name must be non-empty without whitespace: '" + r.name + "'");
    }
    if (!seen.insert(ascii_lower(r.name)).second) {
      Error e(Errc::kDuplicateId, "duplicate relation '" + r.name + "'");
      e.detail = r.name;
      throw e;
    }
  }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::vector<Relation> rels;
  for_each_jsonl(path, [&](long line, const Json& j) {
    rels.push_back({require_string(j, "name", line), optional_string(j, "description", line)});
  });
  return Vocabulary(std::move(rels));
}

Vocabulary Vocabulary::default_personal() {
  return Vocabulary({{"birthday", "the date on which a person was born"},
                     {"anniversary", "the date of a wedding or another commemorated event"}});
}

const Relation* Vocabulary::find(std::string_view name) const {
  for (const auto& r : relations_) {
    if (iequals(r.name, name)) return &r;
  }
  return nullptr;
}

std::string Vocabulary::fingerprint() const {
  std::string joined;
  for (const auto& r : relations_) {
    joined += r.name;
    joined += '\n';
  }
  return fnv1a_hex(joined);
}

bool Triple::valid() const {
  return !trim(subject).empty() && !trim(predicate).empty() && !trim(object).empty();
}

namespace {

bool is_edge_punct(char c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?':
    case '\'': case '"': case '(': case ')': case '[': case ']': case '`':
      return true;
    default:
      return false;
  }
}

// "14th" -> "14"; anything that is not digits + ordinal suffix is untouched.
std::string strip_ordinal(std::string token) {
  if (token.size() < 3) return token;
  std::string_view suffix(token.data() + token.size() - 2, 2);
  if (suffix != "st" && suffix != "nd" && suffix != "rd" && suffix != "th") return token;
  std::string_view digits(token.data(), token.size() - 2);
  if (!std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); })) return token;
  token.resize(token.size() - 2);
  return token;
}

bool contains_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

NormalizedTerm normalize_term(std::string_view text) {
  NormalizedTerm out;
  std::string lowered = ascii_lower(text);
  size_t i = 0;
  while (i < lowered.size()) {
    while (i < lowered.size() && std::isspace(static_cast<unsigned char>(lowered[i]))) ++i;
    size_t start = i;
    while (i < lowered.size() && !std::isspace(static_cast<unsigned char>(lowered[i]))) ++i;
    size_t b = start, e = i;
    while (b < e && is_edge_punct(lowered[b])) ++b;
    while (e > b && is_edge_punct(lowered[e - 1])) --e;
    if (b < e) out.tokens.push_back(strip_ordinal(lowered.substr(b, e - b)));
  }
  return out;
}

bool inclusion_match(std::string_view a, std::string_view b) {
  auto ta = normalize_term(a).tokens;
  auto tb = normalize_term(b).tokens;
  if (ta.empty() || tb.empty()) return ta.empty() && tb.empty();
  return contains_run(tb, ta) || contains_run(ta, tb);
}

}  // namespace p2t
