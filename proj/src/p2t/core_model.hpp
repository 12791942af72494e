#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace p2t {

struct Relation {
  std::string name;
  std::string description;
};

// Ordered, non-empty set of relations with pairwise distinct names. The order
// is significant: prompt text enumerates relations in this order.
class Vocabulary {
 public:
  explicit Vocabulary(std::vector<Relation> relations);

  // JSONL, one {"name", "description"} object per line.
  static Vocabulary load(const std::filesystem::path& path);

  // The birthday/anniversary pair used by the shipped dataset.
  static Vocabulary default_personal();

  const std::vector<Relation>& relations() const { return relations_; }
  size_t size() const { return relations_.size(); }

  // Case-insensitive lookup returning the canonical relation.
  const Relation* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  // Stable hash of the relation names in order.
  std::string fingerprint() const;

 private:
  std::vector<Relation> relations_;
};

struct Triple {
  std::string subject;
  std::string predicate;
  std::string object;

  bool valid() const;
  friend bool operator==(const Triple&, const Triple&) = default;
};

// Lowercased token list produced by normalize_term.
struct NormalizedTerm {
  std::vector<std::string> tokens;
  friend bool operator==(const NormalizedTerm&, const NormalizedTerm&) = default;
};

NormalizedTerm normalize_term(std::string_view text);

// True iff one normalized token list is a contiguous run inside the other.
// Two empty lists match; empty against non-empty never does.
bool inclusion_match(std::string_view a, std::string_view b);

}  // namespace p2t
