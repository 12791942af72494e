#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "p2t/core_model.hpp"
#include "p2t/datagen.hpp"
#include "p2t/io.hpp"
#include "p2t/parser.hpp"

namespace p2t {

enum class Protocol { kRelation, kTriple };
enum class Verdict { kTP, kFP, kFN };
enum class F1Mode { kHarmonicOfMacro, kMeanOfPerClass };

const char* protocol_name(Protocol p);
const char* verdict_name(Verdict v);
const char* f1_mode_name(F1Mode m);
std::optional<F1Mode> f1_mode_from(std::string_view name);

struct Judgement {
  std::string record_id;
  Protocol protocol;
  Verdict verdict;
  std::string gold_relation;
  std::optional<std::string> predicted_relation;

  // Class the verdict is counted against: predicted for FP, gold otherwise.
  const std::string& attributed_relation() const;
  Json to_json() const;
};

struct ClassCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long support = 0;  // gold records of this class

  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

// Keyed by canonical relation name; every vocabulary relation is present.
struct ConfusionCounts {
  std::map<std::string, ClassCounts> per_relation;

  void add(const Judgement& j);
  long total_verdicts() const;

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct Metrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// 2PR/(P+R), 0 when P+R == 0.
double harmonic_f1(double precision, double recall);

// Per-class P (1 when tp+fp == 0) and R (0 when tp+fn == 0), unweighted means
// over the classes with gold support.
Metrics compute_metrics(const ConfusionCounts& counts, F1Mode mode = F1Mode::kHarmonicOfMacro);

Judgement judge_relation(const ExtractionOutcome& outcome, const DatasetRecord& gold, const Vocabulary& vocab);
Judgement judge_triple(const ExtractionOutcome& outcome, const DatasetRecord& gold, const Vocabulary& vocab);

struct EvalReport {
  Protocol protocol;
  ConfusionCounts counts;
  Metrics metrics;
  F1Mode f1_mode;

  Json to_json() const;
};

struct RecordOutcome {
  std::string id;
  ExtractionOutcome outcome;
  std::string error;  // backend failure note; such outcomes are retried on resume

  Json to_json() const;
  static RecordOutcome from_json(const Json& j, long line = 0);
};

std::vector<RecordOutcome> load_outcomes(const std::filesystem::path& path);
std::string outcomes_jsonl(const std::vector<RecordOutcome>& outcomes);

struct EvalRun {
  EvalReport relation;
  EvalReport triple;
  std::vector<Judgement> judgements;  // relation then triple, per gold record
};

// Pairs outcomes with gold by id. PairingMismatch lists unpaired/duplicate ids.
EvalRun evaluate_run(const std::vector<RecordOutcome>& outcomes, const std::vector<DatasetRecord>& gold,
                     const Vocabulary& vocab, F1Mode mode = F1Mode::kHarmonicOfMacro);

struct TableRow {
  std::string method;
  Metrics relation;
  Metrics triple;
};

// Methods x {Relation, Triple} x {Precision, Recall, F1-score}, 4 decimals.
std::string render_table(const std::vector<TableRow>& rows);

}  // namespace p2t
