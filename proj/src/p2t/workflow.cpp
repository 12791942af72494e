#include "p2t/workflow.hpp"

#include <set>
#include <unordered_map>

namespace p2t::workflow {

ExpandSummary expand_file(const fs::path& templates, int variants, std::uint64_t seed, const fs::path& out) {
  auto tmpls = load_templates(templates);
  auto records = expand_templates(tmpls, variants, seed);
  save_dataset(out, records);
  return {tmpls.size(), records.size()};
}

ParaphraseSummary paraphrase_file(const fs::path& in, int per, Backend& backend, const GenerationParams& params,
                                  const ParaphraseOptions& options, bool include_originals, const fs::path& out,
                                  const fs::path& rejects) {
  auto records = load_dataset(in);
  auto result = paraphrase_records(records, per, backend, params, options);
  std::vector<DatasetRecord> kept;
  kept.reserve(result.records.size());
  for (auto& r : result.records) {
    if (include_originals || r.paraphrase > 0 || per == 0) kept.push_back(std::move(r));
  }
  save_dataset(out, kept);
  fs::path rejects_path = rejects;
  if (rejects_path.empty()) {
    rejects_path = out;
    rejects_path += ".rejects.jsonl";
  }
  write_file_atomic(rejects_path, rejects_jsonl(result.rejects));
  return {records.size(), kept.size(), result.rejects.size()};
}

SplitSummary split_file(const fs::path& in, const SplitSpec& spec, const fs::path& out) {
  auto records = split_records(load_dataset(in), spec);
  SplitSummary s;
  s.total = records.size();
  for (const auto& r : records) {
    if (!r.split) continue;
    switch (*r.split) {
      case Split::kTrain: ++s.train; break;
      case Split::kValid: ++s.valid; break;
      case Split::kTest: ++s.test; break;
    }
  }
  save_dataset(out, records);
  return s;
}

ExportSummary export_file(const fs::path& in, const fs::path& out_dir) {
  return export_finetune(load_dataset(in), out_dir);
}

PromptBundle build_bundle(const ExtractConfig& config, const Vocabulary& vocab, const std::string& user_prompt) {
  switch (config.mode) {
    case PromptMode::kZeroShot:
      return build_zero_shot(vocab, user_prompt,
                             config.instructions ? *config.instructions : InstructionTemplate::default_zero_shot());
    case PromptMode::kFewShot:
      return build_few_shot(vocab, config.bank, config.per_relation, user_prompt,
                            config.instructions ? *config.instructions : InstructionTemplate::default_few_shot());
    case PromptMode::kFinetuned:
      return build_finetuned(vocab, user_prompt);
    case PromptMode::kParaphrase:
      break;
  }
  throw Error(Errc::kInvalidArgument, "paraphrase is not an extraction mode");
}

ExtractSummary extract_file(const ExtractConfig& config, const Vocabulary& vocab, Backend& backend,
                            const fs::path& dataset, const fs::path& out) {
  auto records = load_dataset(dataset);
  std::unordered_map<std::string, RecordOutcome> done;
  std::vector<std::string> extra_ids;
  if (fs::exists(out)) {
    std::set<std::string> dataset_ids;
    for (const auto& r : records) dataset_ids.insert(r.id);
    for (auto& o : load_outcomes(out)) {
      if (!o.error.empty()) continue;
      if (!dataset_ids.count(o.id)) extra_ids.push_back(o.id);
      done.insert_or_assign(o.id, std::move(o));
    }
  }

  ExtractSummary summary;
  summary.total = records.size();
  std::vector<size_t> pending;
  std::vector<PromptBundle> bundles;
  for (size_t i = 0; i < records.size(); ++i) {
    if (done.count(records[i].id)) {
      ++summary.skipped;
      continue;
    }
    pending.push_back(i);
    bundles.push_back(build_bundle(config, vocab, records[i].prompt));
  }
  summary.requested = pending.size();

  auto results = complete_batch(backend, bundles, config.params, config.max_in_flight, config.retry);
  for (size_t p = 0; p < pending.size(); ++p) {
    RecordOutcome ro;
    ro.id = records[pending[p]].id;
    if (results[p].ok()) {
      ro.outcome = extract_outcome(results[p].completion->text, vocab, config.cues);
    } else {
      ++summary.backend_errors;
      const Error& e = *results[p].error;
      ro.error = std::string(errc_name(e.code())) + ": " + e.what();
      ro.outcome = ExtractionOutcome::unparseable("", "backend error: " + ro.error);
    }
    done.insert_or_assign(ro.id, std::move(ro));
  }

  std::vector<RecordOutcome> ordered;
  ordered.reserve(records.size() + extra_ids.size());
  for (const auto& r : records) ordered.push_back(done.at(r.id));
  for (const auto& id : extra_ids) ordered.push_back(done.at(id));
  write_file_atomic(out, outcomes_jsonl(ordered));
  return summary;
}

EvaluateResult evaluate_files(const fs::path& outcomes, const fs::path& gold, const Vocabulary& vocab, F1Mode mode,
                              const fs::path& out_dir, const std::string& method_label) {
  EvaluateResult res{evaluate_run(load_outcomes(outcomes), load_dataset(gold), vocab, mode), {}};
  res.table = render_table({{method_label, res.run.relation.metrics, res.run.triple.metrics}});
  if (!out_dir.empty()) {
    Json report{{"relation", res.run.relation.to_json()}, {"triple", res.run.triple.to_json()}};
    write_file_atomic(out_dir / "report.json", report.dump(2) + "\n");
    std::string audit;
    for (const auto& j : res.run.judgements) audit += j.to_json().dump() + "\n";
    write_file_atomic(out_dir / "judgements.jsonl", audit);
    write_file_atomic(out_dir / "table.txt", res.table);
  }
  return res;
}

}  // namespace p2t::workflow
