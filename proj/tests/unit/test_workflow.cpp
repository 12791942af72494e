#include <doctest.h>

#include "p2t/workflow.hpp"
#include "support/test_support.hpp"

using namespace p2t;
using p2t::testing::count_lines;
using p2t::testing::fixture_dir;
using p2t::testing::TempDir;

namespace {

ConfusionCounts counts_from_json(const Json& j) {
  ConfusionCounts c;
  for (const auto& [name, v] : j.items()) {
    c.per_relation[name] = {v["tp"].get<long>(), v["fp"].get<long>(), v["fn"].get<long>(), v["support"].get<long>()};
  }
  return c;
}

}  // namespace

TEST_CASE("extract over the 200-record tape matches the oracle counts") {
  TempDir tmp;
  auto dir = fixture_dir() / "eval200";
  auto vocab = Vocabulary::load(p2t::testing::data_dir() / "vocabulary.jsonl");
  auto tape = ReplayTape::load(dir / "tape.jsonl");
  ReplayBackend backend(tape);
  workflow::ExtractConfig config;
  config.max_in_flight = 8;
  auto summary = workflow::extract_file(config, vocab, backend, dir / "gold.jsonl", tmp / "outcomes.jsonl");
  CHECK(summary.total == 200);
  CHECK(summary.requested == 200);
  CHECK(summary.backend_errors == 0);
  CHECK(count_lines(tmp / "outcomes.jsonl") == 200);

  auto result = workflow::evaluate_files(tmp / "outcomes.jsonl", dir / "gold.jsonl", vocab,
                                         F1Mode::kHarmonicOfMacro, tmp / "report", "Zero-shot");
  auto expected = Json::parse(read_file(dir / "expected_counts.json"));
  CHECK(result.run.relation.counts == counts_from_json(expected["relation"]));
  CHECK(result.run.triple.counts == counts_from_json(expected["triple"]));
  CHECK(std::filesystem::exists(tmp / "report" / "report.json"));
  CHECK(count_lines(tmp / "report" / "judgements.jsonl") == 400);
  CHECK(read_file(tmp / "report" / "table.txt") == result.table);
  CHECK(result.table.find("Zero-shot") != std::string::npos);

  auto report = Json::parse(read_file(tmp / "report" / "report.json"));
  CHECK(report["relation"]["macro_f1"].get<double>() == doctest::Approx(result.run.relation.metrics.f1));
}

TEST_CASE("extract is resumable and only requests missing ids") {
  TempDir tmp;
  auto dir = fixture_dir() / "eval200";
  auto vocab = Vocabulary::default_personal();
  auto gold = load_dataset(dir / "gold.jsonl");
  auto tape = ReplayTape::load(dir / "tape.jsonl");
  workflow::ExtractConfig config;

  // Simulate an interrupted run: first 50 done, record 51 failed on the backend.
  std::vector<DatasetRecord> head(gold.begin(), gold.begin() + 50);
  save_dataset(tmp / "head.jsonl", head);
  {
    ReplayBackend backend(tape);
    workflow::extract_file(config, vocab, backend, tmp / "head.jsonl", tmp / "out.jsonl");
  }
  auto partial = load_outcomes(tmp / "out.jsonl");
  partial.push_back({gold[50].id, ExtractionOutcome::unparseable("", "backend failure"), "Network: refused"});
  p2t::testing::write_text(tmp / "out.jsonl", outcomes_jsonl(partial));

  auto fresh = ReplayTape::load(dir / "tape.jsonl");
  ReplayBackend backend(fresh);
  auto summary = workflow::extract_file(config, vocab, backend, dir / "gold.jsonl", tmp / "out.jsonl");
  CHECK(summary.skipped == 50);
  CHECK(summary.requested == 150);
  CHECK(fresh->lookups() == 150);
  for (size_t i = 0; i < gold.size(); ++i) {
    CHECK(fresh->lookups_for("zero_shot", gold[i].prompt) == (i < 50 ? 0u : 1u));
  }
  auto all = load_outcomes(tmp / "out.jsonl");
  REQUIRE(all.size() == 200);
  for (size_t i = 0; i < gold.size(); ++i) {
    CHECK(all[i].id == gold[i].id);
    CHECK(all[i].error.empty());
  }

  // A complete file is left alone.
  auto idle = ReplayTape::load(dir / "tape.jsonl");
  ReplayBackend idle_backend(idle);
  auto none = workflow::extract_file(config, vocab, idle_backend, dir / "gold.jsonl", tmp / "out.jsonl");
  CHECK(none.requested == 0);
  CHECK(idle->lookups() == 0);
}

TEST_CASE("extract records backend failures as retryable outcomes") {
  TempDir tmp;
  auto dir = fixture_dir() / "eval10";
  auto vocab = Vocabulary::default_personal();
  ReplayBackend backend(std::make_shared<ReplayTape>());
  workflow::ExtractConfig config;
  config.retry.max_retries = 0;
  auto summary = workflow::extract_file(config, vocab, backend, dir / "gold.jsonl", tmp / "out.jsonl");
  CHECK(summary.backend_errors == 10);
  for (const auto& o : load_outcomes(tmp / "out.jsonl")) {
    CHECK(o.outcome.kind == OutcomeKind::kUnparseable);
    CHECK(o.error.rfind("TapeMiss", 0) == 0);
  }
}

TEST_CASE("few-shot bundles come from the configured bank") {
  auto vocab = Vocabulary::default_personal();
  workflow::ExtractConfig config;
  config.mode = PromptMode::kFewShot;
  config.bank = load_example_bank(p2t::testing::data_dir() / "few_shot_bank.jsonl", &vocab);
  config.per_relation = 2;
  auto bundle = workflow::build_bundle(config, vocab, "I was born in 1990.");
  CHECK(bundle.mode == PromptMode::kFewShot);
  CHECK(bundle.messages.size() == 1 + 2 * 2 * 2 + 1);
  CHECK(bundle.final_user_text() == "I was born in 1990.");

  config.mode = PromptMode::kFinetuned;
  auto ft = workflow::build_bundle(config, vocab, "I was born in 1990.");
  CHECK(ft.messages.size() == 1);
}

TEST_CASE("file pipeline: expand, paraphrase, split, export") {
  TempDir tmp;
  auto data = p2t::testing::data_dir();
  auto expand = workflow::expand_file(data / "templates.jsonl", 2, 5, tmp / "expanded.jsonl");
  CHECK(expand.templates == 86);
  CHECK(expand.records == 172);

  auto records = load_dataset(tmp / "expanded.jsonl");
  auto tape = std::make_shared<ReplayTape>();
  for (const auto& e : p2t::testing::paraphrase_tape(records, 2)) tape->record(e.mode, e.user_text, e.response_text);
  ReplayBackend backend(tape);
  auto para = workflow::paraphrase_file(tmp / "expanded.jsonl", 2, backend, {}, {}, false, tmp / "para.jsonl");
  CHECK(para.inputs == 172);
  CHECK(para.written == 344);
  CHECK(para.rejects == 0);
  CHECK(count_lines(tmp / "para.jsonl") == 344);
  CHECK(std::filesystem::exists(tmp / "para.jsonl.rejects.jsonl"));
  for (const auto& r : load_dataset(tmp / "para.jsonl")) CHECK(r.paraphrase > 0);

  auto with = workflow::paraphrase_file(tmp / "expanded.jsonl", 2, backend, {}, {}, true, tmp / "para_all.jsonl");
  CHECK(with.written == 516);

  auto split = workflow::split_file(tmp / "para.jsonl", {100, 20, 20, 1, SplitMode::kGroupByBase}, tmp / "split.jsonl");
  CHECK(split.total == 344);
  CHECK(split.train == 100);
  auto exported = workflow::export_file(tmp / "split.jsonl", tmp / "ft");
  CHECK(exported.train == 100);
  CHECK(exported.valid == 20);
  CHECK(exported.test == 20);
}
