#include "p2t/evaluator.hpp"

#include <cstdio>
#include <set>
#include <unordered_map>

#include "p2t/error.hpp"

namespace p2t {

const char* protocol_name(Protocol p) { return p == Protocol::kRelation ? "relation" : "triple"; }

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kTP: return "TP";
    case Verdict::kFP: return "FP";
    case Verdict::kFN: return "FN";
  }
  return "FN";
}

const char* f1_mode_name(F1Mode m) {
  return m == F1Mode::kHarmonicOfMacro ? "harmonic_of_macro" : "mean_of_per_class";
}

std::optional<F1Mode> f1_mode_from(std::string_view name) {
  if (name == "harmonic_of_macro") return F1Mode::kHarmonicOfMacro;
  if (name == "mean_of_per_class") return F1Mode::kMeanOfPerClass;
  return std::nullopt;
}

const std::string& Judgement::attributed_relation() const {
  return verdict == Verdict::kFP ? *predicted_relation : gold_relation;
}

Json Judgement::to_json() const {
  return Json{{"record_id", record_id},
              {"protocol", protocol_name(protocol)},
              {"verdict", verdict_name(verdict)},
              {"gold_relation", gold_relation},
              {"predicted_relation", predicted_relation ? Json(*predicted_relation) : Json(nullptr)}};
}

void ConfusionCounts::add(const Judgement& j) {
  ++per_relation[j.gold_relation].support;
  auto& c = per_relation[j.attributed_relation()];
  switch (j.verdict) {
    case Verdict::kTP: ++c.tp; break;
    case Verdict::kFP: ++c.fp; break;
    case Verdict::kFN: ++c.fn; break;
  }
}

long ConfusionCounts::total_verdicts() const {
  long n = 0;
  for (const auto& [_, c] : per_relation) n += c.tp + c.fp + c.fn;
  return n;
}

double harmonic_f1(double precision, double recall) {
  double denom = precision + recall;
  return denom > 0 ? 2 * precision * recall / denom : 0.0;
}

Metrics compute_metrics(const ConfusionCounts& counts, F1Mode mode) {
  double p_sum = 0, r_sum = 0, f_sum = 0;
  int classes = 0;
  for (const auto& [_, c] : counts.per_relation) {
    if (c.support == 0) continue;
    double p = c.tp + c.fp == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    double r = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    p_sum += p;
    r_sum += r;
    f_sum += harmonic_f1(p, r);
    ++classes;
  }
  if (classes == 0) throw Error(Errc::kNoEvaluatedRecords, "no relation has evaluated gold records");
  Metrics m;
  m.precision = p_sum / classes;
  m.recall = r_sum / classes;
  m.f1 = mode == F1Mode::kHarmonicOfMacro ? harmonic_f1(m.precision, m.recall) : f_sum / classes;
  return m;
}

namespace {

const Relation& gold_relation(const DatasetRecord& gold, const Vocabulary& vocab) {
  const Relation* rel = vocab.find(trim(gold.relation));
  if (rel == nullptr) {
    Error e(Errc::kGoldRelationUnknown, "record " + gold.id + ": gold relation '" + gold.relation + "' not in vocabulary");
    e.detail = gold.relation;
    throw e;
  }
  return *rel;
}

}  // namespace

Judgement judge_relation(const ExtractionOutcome& outcome, const DatasetRecord& gold, const Vocabulary& vocab) {
  const Relation& gold_rel = gold_relation(gold, vocab);
  Judgement j{gold.id, Protocol::kRelation, Verdict::kFN, gold_rel.name, std::nullopt};
  if (outcome.kind != OutcomeKind::kExtracted || !outcome.triple) return j;
  const Relation* predicted = vocab.find(trim(outcome.triple->predicate));
  if (predicted == nullptr) {
    j.predicted_relation = outcome.triple->predicate;
    return j;
  }
  j.predicted_relation = predicted->name;
  j.verdict = predicted->name == gold_rel.name ? Verdict::kTP : Verdict::kFP;
  return j;
}

Judgement judge_triple(const ExtractionOutcome& outcome, const DatasetRecord& gold, const Vocabulary& vocab) {
  Judgement j = judge_relation(outcome, gold, vocab);
  j.protocol = Protocol::kTriple;
  if (j.verdict == Verdict::kTP &&
      !(inclusion_match(outcome.triple->subject, gold.subject_gt) &&
        inclusion_match(outcome.triple->object, gold.object_gt))) {
    j.verdict = Verdict::kFN;
  }
  return j;
}

Json EvalReport::to_json() const {
  Json per = Json::object();
  for (const auto& [name, c] : counts.per_relation) {
    per[name] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"support", c.support}};
  }
  return Json{{"protocol", protocol_name(protocol)},
              {"f1_mode", f1_mode_name(f1_mode)},
              {"counts", per},
              {"macro_precision", metrics.precision},
              {"macro_recall", metrics.recall},
              {"macro_f1", metrics.f1}};
}

Json RecordOutcome::to_json() const {
  Json j{{"id", id}, {"kind", outcome_kind_name(outcome.kind)}};
  if (outcome.triple) {
    j["triple"] = {{"subject", outcome.triple->subject},
                   {"predicate", outcome.triple->predicate},
                   {"object", outcome.triple->object}};
  } else {
    j["triple"] = nullptr;
  }
  j["justification"] = outcome.justification;
  j["raw_text"] = outcome.raw_text;
  if (!error.empty()) j["error"] = error;
  return j;
}

RecordOutcome RecordOutcome::from_json(const Json& j, long line) {
  RecordOutcome r;
  r.id = require_string(j, "id", line);
  std::string kind = require_string(j, "kind", line);
  auto parsed = outcome_kind_from(kind);
  auto fail = [&](const std::string& field, const std::string& what) {
    Error e(Errc::kSchema, "line " + std::to_string(line) + ": " + field + ": " + what);
    e.line = line;
    e.detail = field;
    return e;
  };
  if (!parsed) throw fail("kind", "unknown kind '" + kind + "'");
  r.outcome.kind = *parsed;
  auto t = j.find("triple");
  if (t != j.end() && !t->is_null()) {
    if (!t->is_object()) throw fail("triple", "not an object");
    r.outcome.triple = Triple{require_string(*t, "subject", line), require_string(*t, "predicate", line),
                              require_string(*t, "object", line)};
  }
  if ((r.outcome.kind == OutcomeKind::kExtracted) != r.outcome.triple.has_value()) {
    throw fail("triple", "must be present exactly when kind is Extracted");
  }
  r.outcome.justification = optional_string(j, "justification", line);
  r.outcome.raw_text = optional_string(j, "raw_text", line);
  r.error = optional_string(j, "error", line);
  return r;
}

std::vector<RecordOutcome> load_outcomes(const std::filesystem::path& path) {
  std::vector<RecordOutcome> out;
  for_each_jsonl(path, [&](long line, const Json& j) { out.push_back(RecordOutcome::from_json(j, line)); });
  return out;
}

std::string outcomes_jsonl(const std::vector<RecordOutcome>& outcomes) {
  std::string out;
  for (const auto& o : outcomes) {
    out += o.to_json().dump();
    out += '\n';
  }
  return out;
}

EvalRun evaluate_run(const std::vector<RecordOutcome>& outcomes, const std::vector<DatasetRecord>& gold,
                     const Vocabulary& vocab, F1Mode mode) {
  std::vector<std::string> offending;
  std::unordered_map<std::string, const ExtractionOutcome*> by_id;
  for (const auto& o : outcomes) {
    if (!by_id.emplace(o.id, &o.outcome).second) offending.push_back(o.id);
  }
  std::set<std::string> gold_ids;
  for (const auto& g : gold) {
    if (!gold_ids.insert(g.id).second || !by_id.count(g.id)) offending.push_back(g.id);
  }
  for (const auto& o : outcomes) {
    if (!gold_ids.count(o.id)) offending.push_back(o.id);
  }
  if (!offending.empty()) {
    std::string list;
    for (size_t i = 0; i < offending.size() && i < 5; ++i) list += (i ? ", " : "") + offending[i];
    Error e(Errc::kPairingMismatch,
            std::to_string(offending.size()) + " id(s) do not pair between outcomes and gold: " + list);
    e.ids = std::move(offending);
    throw e;
  }
  if (gold.empty()) throw Error(Errc::kNoEvaluatedRecords, "no records to evaluate");

  EvalRun run{{Protocol::kRelation, {}, {}, mode}, {Protocol::kTriple, {}, {}, mode}, {}};
  for (const auto& r : vocab.relations()) {
    run.relation.counts.per_relation[r.name];
    run.triple.counts.per_relation[r.name];
  }
  run.judgements.reserve(gold.size() * 2);
  for (const auto& g : gold) {
    const ExtractionOutcome& o = *by_id.at(g.id);
    Judgement rel = judge_relation(o, g, vocab);
    Judgement tri = judge_triple(o, g, vocab);
    run.relation.counts.add(rel);
    run.triple.counts.add(tri);
    run.judgements.push_back(std::move(rel));
    run.judgements.push_back(std::move(tri));
  }
  run.relation.metrics = compute_metrics(run.relation.counts, mode);
  run.triple.metrics = compute_metrics(run.triple.counts, mode);
  return run;
}

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string pad(std::string s, size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string render_table(const std::vector<TableRow>& rows) {
  size_t label = 20;
  for (const auto& r : rows) label = std::max(label, r.method.size() + 2);
  const size_t cell = 10;
  const size_t group = cell * 3;
  std::string out;
  out += pad("", label) + "| " + pad("Relation", group) + "| " + pad("Triple", group) + "\n";
  std::string header = pad("Precision", cell) + pad("Recall", cell) + pad("F1-score", cell);
  out += pad("", label) + "| " + header + "| " + header + "\n";
  out += std::string(label, '-') + "+" + std::string(group + 1, '-') + "+" + std::string(group + 1, '-') + "\n";
  for (const auto& r : rows) {
    auto cells = [&](const Metrics& m) {
      return pad(fixed4(m.precision), cell) + pad(fixed4(m.recall), cell) + pad(fixed4(m.f1), cell);
    };
    out += pad(r.method, label) + "| " + cells(r.relation) + "| " + cells(r.triple) + "\n";
  }
  return out;
}

}  // namespace p2t
