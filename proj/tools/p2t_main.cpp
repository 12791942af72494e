// p2t: command-line front end over the C API in p2t/p2t.h.
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "p2t/p2t.h"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kBackend = 3 };

int exit_code_for(p2t_status s) {
  switch (s) {
    case P2T_OK:
      return kOk;
    case P2T_ERR_INVALID_ARGUMENT:
    case P2T_ERR_TEMPLATE:
    case P2T_ERR_EMPTY_VOCABULARY:
    case P2T_ERR_MISSING_EXAMPLES:
      return kUsage;
    case P2T_ERR_NETWORK:
    case P2T_ERR_HTTP_STATUS:
    case P2T_ERR_MALFORMED_RESPONSE:
    case P2T_ERR_RATE_LIMITED:
    case P2T_ERR_TAPE_MISS:
      return kBackend;
    default:
      return kData;
  }
}

int fail(p2t_status s) {
  std::cerr << "p2t: " << p2t_status_name(s) << ": " << p2t_last_error() << "\n";
  return exit_code_for(s);
}

struct Globals {
  std::uint64_t seed = 0;
  std::string endpoint;
  std::string model;
  std::string tape;
  int max_in_flight = 1;
  bool record = false;
};

class BackendHandle {
 public:
  ~BackendHandle() { p2t_backend_free(handle_); }
  p2t_status open(const Globals& g) {
    p2t_backend_options opts;
    p2t_backend_options_init(&opts);
    opts.endpoint = g.endpoint.empty() ? nullptr : g.endpoint.c_str();
    opts.model = g.model.empty() ? nullptr : g.model.c_str();
    opts.tape_path = g.tape.empty() ? nullptr : g.tape.c_str();
    opts.record = g.record ? 1 : 0;
    opts.max_in_flight = g.max_in_flight;
    return p2t_backend_create(&opts, &handle_);
  }
  p2t_backend* get() const { return handle_; }

 private:
  p2t_backend* handle_ = nullptr;
};

class VocabHandle {
 public:
  ~VocabHandle() { p2t_vocabulary_free(handle_); }
  p2t_status open(const std::string& path) {
    return p2t_vocabulary_load(path.empty() ? nullptr : path.c_str(), &handle_);
  }
  const p2t_vocabulary* get() const { return handle_; }

 private:
  p2t_vocabulary* handle_ = nullptr;
};

const char* c_or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prompt-to-triple extraction toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value configuration file");

  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--endpoint", g.endpoint, "Chat-completions base URL");
  app.add_option("--model", g.model, "Model identifier");
  app.add_option("--tape", g.tape, "Replay tape (JSONL); activates the mock backend");
  app.add_flag("--record", g.record, "Append live responses to the tape on a miss");
  app.add_option("--max-in-flight", g.max_in_flight, "Maximum concurrent requests")->check(CLI::PositiveNumber);

  // datagen
  auto* datagen = app.add_subcommand("datagen", "Synthetic dataset pipeline");
  datagen->require_subcommand(1);
  datagen->fallthrough();

  auto* expand = datagen->add_subcommand("expand", "Expand templates with random dates");
  std::string templates_path, expand_out;
  int variants = 10;
  expand->add_option("--templates", templates_path)->required();
  expand->add_option("--variants", variants)->capture_default_str()->check(CLI::PositiveNumber);
  expand->add_option("--out", expand_out)->required();
  expand->fallthrough();

  auto* paraphrase = datagen->add_subcommand("paraphrase", "Paraphrase prompts through a model");
  std::string para_in, para_out, para_rejects;
  int per = 5;
  bool include_originals = false;
  paraphrase->add_option("--in", para_in)->required();
  paraphrase->add_option("--per", per)->capture_default_str()->check(CLI::NonNegativeNumber);
  paraphrase->add_option("--out", para_out)->required();
  paraphrase->add_option("--rejects", para_rejects, "Rejects report (default <out>.rejects.jsonl)");
  paraphrase->add_flag("--include-originals", include_originals, "Also write the unparaphrased records");
  paraphrase->fallthrough();

  auto* split = datagen->add_subcommand("split", "Assign train/valid/test splits");
  std::string split_in, split_out, split_mode = "record_random";
  std::vector<size_t> sizes{1000, 200, 200};
  split->add_option("--in", split_in)->required();
  split->add_option("--sizes", sizes, "train,valid,test")->delimiter(',')->expected(3)->capture_default_str();
  split->add_option("--mode", split_mode)->check(CLI::IsMember({"record_random", "group_by_base"}))->capture_default_str();
  split->add_option("--out", split_out)->required();
  split->fallthrough();

  auto* exp = datagen->add_subcommand("export", "Write fine-tuning JSONL and manifest");
  std::string export_in, export_dir;
  exp->add_option("--in", export_in)->required();
  exp->add_option("--out-dir", export_dir)->required();
  exp->fallthrough();

  // extract
  auto* extract = app.add_subcommand("extract", "Run extraction over a dataset");
  std::string mode = "zero_shot", vocab_path, template_path, bank_path, cues_path, dataset_path, extract_out;
  int per_relation = 2;
  extract->add_option("--mode", mode)->check(CLI::IsMember({"zero_shot", "few_shot", "finetuned"}))->capture_default_str();
  extract->add_option("--vocab", vocab_path, "Vocabulary JSONL (default: birthday, anniversary)");
  extract->add_option("--template", template_path, "Prompt template file");
  extract->add_option("--bank", bank_path, "Few-shot example bank (JSONL)");
  extract->add_option("--per-relation", per_relation)->capture_default_str()->check(CLI::PositiveNumber);
  extract->add_option("--cues", cues_path, "Out-of-context cue phrases, one per line");
  extract->add_option("--dataset", dataset_path)->required();
  extract->add_option("--out", extract_out)->required();
  extract->fallthrough();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score outcomes against gold records");
  std::string outcomes_path, gold_path, eval_vocab, f1_mode = "harmonic_of_macro", eval_dir, label;
  evaluate->add_option("--outcomes", outcomes_path)->required();
  evaluate->add_option("--gold", gold_path)->required();
  evaluate->add_option("--vocab", eval_vocab, "Vocabulary JSONL (default: birthday, anniversary)");
  evaluate->add_option("--f1-mode", f1_mode)
      ->check(CLI::IsMember({"harmonic_of_macro", "mean_of_per_class"}))
      ->capture_default_str();
  evaluate->add_option("--out-dir", eval_dir, "Directory for report.json, judgements.jsonl, table.txt");
  evaluate->add_option("--label", label, "Row label in the table");
  evaluate->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  p2t_status s = P2T_OK;
  if (expand->parsed()) {
    size_t n_templates = 0, n_records = 0;
    s = p2t_datagen_expand(templates_path.c_str(), variants, g.seed, expand_out.c_str(), &n_templates, &n_records);
    if (s != P2T_OK) return fail(s);
    std::cout << "expanded " << n_templates << " -> " << n_records << "\n";
    return kOk;
  }
  if (paraphrase->parsed()) {
    BackendHandle backend;
    if ((s = backend.open(g)) != P2T_OK) return fail(s);
    size_t inputs = 0, written = 0, rejects = 0;
    s = p2t_datagen_paraphrase(backend.get(), para_in.c_str(), per, include_originals ? 1 : 0, para_out.c_str(),
                               c_or_null(para_rejects), &inputs, &written, &rejects);
    if (s != P2T_OK) return fail(s);
    std::cout << "paraphrased " << inputs << " -> " << written << " (" << rejects << " fallback)\n";
    return kOk;
  }
  if (split->parsed()) {
    size_t total = 0, assigned = 0;
    s = p2t_datagen_split(split_in.c_str(), sizes[0], sizes[1], sizes[2], g.seed,
                          split_mode == "group_by_base" ? P2T_SPLIT_GROUP_BY_BASE : P2T_SPLIT_RECORD_RANDOM,
                          split_out.c_str(), &total, &assigned);
    if (s != P2T_OK) return fail(s);
    std::cout << "split " << total << " -> train " << sizes[0] << ", valid " << sizes[1] << ", test " << sizes[2]
              << ", unassigned " << (total - assigned) << "\n";
    return kOk;
  }
  if (exp->parsed()) {
    size_t train = 0, valid = 0, test = 0;
    s = p2t_datagen_export(export_in.c_str(), export_dir.c_str(), &train, &valid, &test);
    if (s != P2T_OK) return fail(s);
    std::cout << "exported train " << train << ", valid " << valid << ", test " << test << "\n";
    return kOk;
  }
  if (extract->parsed()) {
    if (mode == "few_shot" && bank_path.empty()) {
      std::cerr << "p2t: few_shot mode requires --bank\n";
      return kUsage;
    }
    if (g.endpoint.empty() && g.tape.empty()) {
      std::cerr << "p2t: extract needs --endpoint or --tape\n";
      return kUsage;
    }
    VocabHandle vocab;
    if ((s = vocab.open(vocab_path)) != P2T_OK) return fail(s);
    BackendHandle backend;
    if ((s = backend.open(g)) != P2T_OK) return fail(s);
    p2t_extract_options opts;
    p2t_extract_options_init(&opts);
    opts.mode = mode == "few_shot" ? P2T_MODE_FEW_SHOT : mode == "finetuned" ? P2T_MODE_FINETUNED : P2T_MODE_ZERO_SHOT;
    opts.template_path = c_or_null(template_path);
    opts.bank_path = c_or_null(bank_path);
    opts.per_relation = per_relation;
    opts.cues_path = c_or_null(cues_path);
    size_t total = 0, requested = 0, errors = 0;
    s = p2t_extract(backend.get(), vocab.get(), &opts, dataset_path.c_str(), extract_out.c_str(), &total, &requested,
                    &errors);
    if (s != P2T_OK) return fail(s);
    std::cout << "extracted " << total << " records (" << requested << " requested, " << errors
              << " backend errors)\n";
    return kOk;
  }
  if (evaluate->parsed()) {
    VocabHandle vocab;
    if ((s = vocab.open(eval_vocab)) != P2T_OK) return fail(s);
    p2t_eval* eval = nullptr;
    s = p2t_evaluate(outcomes_path.c_str(), gold_path.c_str(), vocab.get(),
                     f1_mode == "mean_of_per_class" ? P2T_F1_MEAN_OF_PER_CLASS : P2T_F1_HARMONIC_OF_MACRO,
                     c_or_null(eval_dir), label.empty() ? "run" : label.c_str(), &eval);
    if (s != P2T_OK) return fail(s);
    std::cout << p2t_eval_table(eval);
    p2t_eval_free(eval);
    return kOk;
  }
  return kUsage;
}
