#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "p2t/backend.hpp"
#include "p2t/datagen.hpp"
#include "p2t/evaluator.hpp"
#include "p2t/parser.hpp"
#include "p2t/prompting.hpp"

// File-level compositions behind the command-line subcommands.
namespace p2t::workflow {

namespace fs = std::filesystem;

struct ExpandSummary {
  size_t templates = 0;
  size_t records = 0;
};
ExpandSummary expand_file(const fs::path& templates, int variants, std::uint64_t seed, const fs::path& out);

struct ParaphraseSummary {
  size_t inputs = 0;
  size_t written = 0;
  size_t rejects = 0;
};
// Writes paraphrase-lineage records only unless include_originals is set.
// The rejects report is written next to `out` unless a path is given.
ParaphraseSummary paraphrase_file(const fs::path& in, int per, Backend& backend, const GenerationParams& params,
                                  const ParaphraseOptions& options, bool include_originals, const fs::path& out,
                                  const fs::path& rejects = {});

struct SplitSummary {
  size_t total = 0;
  size_t train = 0;
  size_t valid = 0;
  size_t test = 0;
};
SplitSummary split_file(const fs::path& in, const SplitSpec& spec, const fs::path& out);

ExportSummary export_file(const fs::path& in, const fs::path& out_dir);

struct ExtractConfig {
  PromptMode mode = PromptMode::kZeroShot;
  std::optional<InstructionTemplate> instructions;  // default template for the mode when empty
  std::vector<FewShotExample> bank;
  int per_relation = kDefaultExamplesPerRelation;
  CueList cues;
  GenerationParams params;
  int max_in_flight = 1;
  RetryPolicy retry;
};

struct ExtractSummary {
  size_t total = 0;
  size_t skipped = 0;    // already present in the output
  size_t requested = 0;
  size_t backend_errors = 0;
};

PromptBundle build_bundle(const ExtractConfig& config, const Vocabulary& vocab, const std::string& user_prompt);

// Resumable: ids already present in `out` without an error note are not
// requested again.
ExtractSummary extract_file(const ExtractConfig& config, const Vocabulary& vocab, Backend& backend,
                            const fs::path& dataset, const fs::path& out);

struct EvaluateResult {
  EvalRun run;
  std::string table;
};

// Writes report.json, judgements.jsonl and table.txt into out_dir (when set).
EvaluateResult evaluate_files(const fs::path& outcomes, const fs::path& gold, const Vocabulary& vocab, F1Mode mode,
                              const fs::path& out_dir, const std::string& method_label);

}  // namespace p2t::workflow
