#include "p2t/p2t.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "p2t/backend.hpp"
#include "p2t/core_model.hpp"
#include "p2t/evaluator.hpp"
#include "p2t/parser.hpp"
#include "p2t/workflow.hpp"

struct p2t_vocabulary {
  p2t::Vocabulary vocab;
};

struct p2t_outcome {
  p2t::ExtractionOutcome outcome;
};

struct p2t_backend {
  std::shared_ptr<p2t::Backend> backend;
  std::shared_ptr<p2t::ReplayTape> tape;
  p2t::GenerationParams params;
  int max_in_flight = 1;
  p2t::RetryPolicy retry;
};

struct p2t_eval {
  p2t::workflow::EvaluateResult result;
};

namespace {

thread_local std::string g_last_error;

p2t_status to_status(p2t::Errc code) {
  using p2t::Errc;
  switch (code) {
    case Errc::kInvalidArgument: return P2T_ERR_INVALID_ARGUMENT;
    case Errc::kIo: return P2T_ERR_IO;
    case Errc::kSchema: return P2T_ERR_SCHEMA;
    case Errc::kDuplicateId: return P2T_ERR_DUPLICATE_ID;
    case Errc::kEmptyVocabulary: return P2T_ERR_EMPTY_VOCABULARY;
    case Errc::kEmptyPrompt: return P2T_ERR_EMPTY_PROMPT;
    case Errc::kMissingExamples: return P2T_ERR_MISSING_EXAMPLES;
    case Errc::kMissingGroundTruth: return P2T_ERR_MISSING_GROUND_TRUTH;
    case Errc::kTemplate: return P2T_ERR_TEMPLATE;
    case Errc::kInfeasibleSplit: return P2T_ERR_INFEASIBLE_SPLIT;
    case Errc::kMissingSplit: return P2T_ERR_MISSING_SPLIT;
    case Errc::kGoldRelationUnknown: return P2T_ERR_GOLD_RELATION_UNKNOWN;
    case Errc::kNoEvaluatedRecords: return P2T_ERR_NO_EVALUATED_RECORDS;
    case Errc::kPairingMismatch: return P2T_ERR_PAIRING_MISMATCH;
    case Errc::kNetwork: return P2T_ERR_NETWORK;
    case Errc::kHttpStatus: return P2T_ERR_HTTP_STATUS;
    case Errc::kMalformedResponse: return P2T_ERR_MALFORMED_RESPONSE;
    case Errc::kRateLimited: return P2T_ERR_RATE_LIMITED;
    case Errc::kTapeMiss: return P2T_ERR_TAPE_MISS;
  }
  return P2T_ERR_INTERNAL;
}

// Runs `fn`, translating exceptions into a status and the thread's last error.
template <class Fn>
p2t_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return P2T_OK;
  } catch (const p2t::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return P2T_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return P2T_ERR_INTERNAL;
  }
}

void require(bool cond, const char* what) {
  if (!cond) throw p2t::Error(p2t::Errc::kInvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <class T>
void set(T* out, T value) {
  if (out != nullptr) *out = value;
}

std::string opt(const char* s) { return s == nullptr ? std::string() : std::string(s); }

}  // namespace

extern "C" {

const char* p2t_status_name(p2t_status status) {
  switch (status) {
    case P2T_OK: return "ok";
    case P2T_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case P2T_ERR_IO: return "Io";
    case P2T_ERR_SCHEMA: return "Schema";
    case P2T_ERR_DUPLICATE_ID: return "DuplicateId";
    case P2T_ERR_EMPTY_VOCABULARY: return "EmptyVocabulary";
    case P2T_ERR_EMPTY_PROMPT: return "EmptyPrompt";
    case P2T_ERR_MISSING_EXAMPLES: return "MissingExamples";
    case P2T_ERR_MISSING_GROUND_TRUTH: return "MissingGroundTruth";
    case P2T_ERR_TEMPLATE: return "Template";
    case P2T_ERR_INFEASIBLE_SPLIT: return "Infeasible";
    case P2T_ERR_MISSING_SPLIT: return "MissingSplit";
    case P2T_ERR_GOLD_RELATION_UNKNOWN: return "GoldRelationUnknown";
    case P2T_ERR_NO_EVALUATED_RECORDS: return "NoEvaluatedRecords";
    case P2T_ERR_PAIRING_MISMATCH: return "PairingMismatch";
    case P2T_ERR_NETWORK: return "Network";
    case P2T_ERR_HTTP_STATUS: return "HttpStatus";
    case P2T_ERR_MALFORMED_RESPONSE: return "MalformedResponse";
    case P2T_ERR_RATE_LIMITED: return "RateLimited";
    case P2T_ERR_TAPE_MISS: return "TapeMiss";
    case P2T_ERR_INTERNAL: return "Internal";
  }
  return "Internal";
}

const char* p2t_last_error(void) { return g_last_error.c_str(); }

void p2t_string_free(char* s) { std::free(s); }

const char* p2t_version(void) { return "0.1.0"; }

// ---- vocabulary ----

p2t_status p2t_vocabulary_load(const char* path, p2t_vocabulary** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    *out = new p2t_vocabulary{path == nullptr ? p2t::Vocabulary::default_personal() : p2t::Vocabulary::load(path)};
  });
}

void p2t_vocabulary_free(p2t_vocabulary* vocab) { delete vocab; }

size_t p2t_vocabulary_size(const p2t_vocabulary* vocab) { return vocab == nullptr ? 0 : vocab->vocab.size(); }

const char* p2t_vocabulary_name(const p2t_vocabulary* vocab, size_t index) {
  if (vocab == nullptr || index >= vocab->vocab.size()) return nullptr;
  return vocab->vocab.relations()[index].name.c_str();
}

p2t_status p2t_vocabulary_fingerprint(const p2t_vocabulary* vocab, char** out) {
  return guarded([&] {
    require(vocab != nullptr && out != nullptr, "null argument");
    *out = dup_string(vocab->vocab.fingerprint());
  });
}

// ---- terms and triples ----

p2t_status p2t_normalize_term(const char* text, char** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    std::string joined;
    for (const auto& tok : p2t::normalize_term(opt(text)).tokens) {
      if (!joined.empty()) joined += ' ';
      joined += tok;
    }
    *out = dup_string(joined);
  });
}

int p2t_inclusion_match(const char* a, const char* b) { return p2t::inclusion_match(opt(a), opt(b)) ? 1 : 0; }

p2t_status p2t_serialize_triple(const char* subject, const char* predicate, const char* object, char** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    p2t::Triple t{opt(subject), opt(predicate), opt(object)};
    require(t.valid(), "triple fields must be non-empty");
    *out = dup_string(p2t::serialize_triple(t));
  });
}

p2t_status p2t_parse_completion(const char* raw, const p2t_vocabulary* vocab, const char* cues_path,
                                p2t_outcome** out) {
  return guarded([&] {
    require(vocab != nullptr && out != nullptr, "null argument");
    p2t::CueList cues = cues_path == nullptr ? p2t::CueList() : p2t::CueList::load(cues_path);
    *out = new p2t_outcome{p2t::extract_outcome(opt(raw), vocab->vocab, cues)};
  });
}

void p2t_outcome_free(p2t_outcome* outcome) { delete outcome; }

p2t_outcome_kind p2t_outcome_get_kind(const p2t_outcome* outcome) {
  if (outcome == nullptr) return P2T_UNPARSEABLE;
  switch (outcome->outcome.kind) {
    case p2t::OutcomeKind::kExtracted: return P2T_EXTRACTED;
    case p2t::OutcomeKind::kOutOfContext: return P2T_OUT_OF_CONTEXT;
    case p2t::OutcomeKind::kUnparseable: return P2T_UNPARSEABLE;
  }
  return P2T_UNPARSEABLE;
}

const char* p2t_outcome_subject(const p2t_outcome* o) {
  return o != nullptr && o->outcome.triple ? o->outcome.triple->subject.c_str() : nullptr;
}

const char* p2t_outcome_predicate(const p2t_outcome* o) {
  return o != nullptr && o->outcome.triple ? o->outcome.triple->predicate.c_str() : nullptr;
}

const char* p2t_outcome_object(const p2t_outcome* o) {
  return o != nullptr && o->outcome.triple ? o->outcome.triple->object.c_str() : nullptr;
}

const char* p2t_outcome_justification(const p2t_outcome* o) {
  return o == nullptr ? nullptr : o->outcome.justification.c_str();
}

// ---- metrics ----

p2t_status p2t_compute_metrics(const long* tp, const long* fp, const long* fn, const long* support, size_t n,
                               p2t_f1_mode mode, double* precision, double* recall, double* f1) {
  return guarded([&] {
    require(n == 0 || (tp != nullptr && fp != nullptr && fn != nullptr && support != nullptr), "null counts");
    p2t::ConfusionCounts counts;
    for (size_t i = 0; i < n; ++i) {
      require(tp[i] >= 0 && fp[i] >= 0 && fn[i] >= 0 && support[i] >= 0, "counts must be >= 0");
      counts.per_relation["class" + std::to_string(i)] = {tp[i], fp[i], fn[i], support[i]};
    }
    auto m = p2t::compute_metrics(counts, mode == P2T_F1_MEAN_OF_PER_CLASS ? p2t::F1Mode::kMeanOfPerClass
                                                                            : p2t::F1Mode::kHarmonicOfMacro);
    set(precision, m.precision);
    set(recall, m.recall);
    set(f1, m.f1);
  });
}

double p2t_harmonic_f1(double precision, double recall) { return p2t::harmonic_f1(precision, recall); }

// ---- backend ----

void p2t_backend_options_init(p2t_backend_options* opts) {
  if (opts == nullptr) return;
  *opts = p2t_backend_options{};
  p2t::GenerationParams defaults;
  p2t::RetryPolicy retry;
  opts->temperature = defaults.temperature;
  opts->max_tokens = defaults.max_tokens;
  opts->timeout_ms = static_cast<int>(defaults.timeout.count());
  opts->max_in_flight = 1;
  opts->max_retries = retry.max_retries;
  opts->initial_backoff_ms = static_cast<int>(retry.initial_backoff.count());
}

p2t_status p2t_backend_create(const p2t_backend_options* opts, p2t_backend** out) {
  return guarded([&] {
    require(opts != nullptr && out != nullptr, "null argument");
    auto b = std::make_unique<p2t_backend>();
    if (opts->model != nullptr) b->params.model = opts->model;
    b->params.temperature = opts->temperature;
    b->params.max_tokens = opts->max_tokens;
    b->params.timeout = std::chrono::milliseconds(opts->timeout_ms);
    if (opts->has_seed) b->params.seed = opts->seed;
    b->params.validate();
    require(opts->max_in_flight >= 1, "max_in_flight must be >= 1");
    require(opts->max_retries >= 0 && opts->initial_backoff_ms >= 0, "retry settings must be >= 0");
    b->max_in_flight = opts->max_in_flight;
    b->retry.max_retries = opts->max_retries;
    b->retry.initial_backoff = std::chrono::milliseconds(opts->initial_backoff_ms);

    std::shared_ptr<p2t::Backend> live;
    if (opts->endpoint != nullptr && *opts->endpoint != '\0') {
      live = std::make_shared<p2t::HttpBackend>(opts->endpoint, opt(opts->api_key));
    }
    if (opts->tape_path != nullptr && *opts->tape_path != '\0') {
      const bool record = opts->record != 0;
      require(!record || live, "record mode needs an endpoint");
      b->tape = p2t::ReplayTape::load(opts->tape_path, record);
      b->backend = std::make_shared<p2t::ReplayBackend>(b->tape, record ? p2t::TapeMode::kRecord : p2t::TapeMode::kStrict,
                                                        live);
    } else {
      require(live != nullptr, "either an endpoint or a tape is required");
      b->backend = live;
    }
    *out = b.release();
  });
}

void p2t_backend_free(p2t_backend* backend) { delete backend; }

size_t p2t_backend_tape_lookups(const p2t_backend* backend) {
  return backend == nullptr || !backend->tape ? 0 : backend->tape->lookups();
}

// ---- dataset pipeline ----

p2t_status p2t_datagen_expand(const char* templates_path, int variants, uint64_t seed, const char* out_path,
                              size_t* n_templates, size_t* n_records) {
  return guarded([&] {
    require(templates_path != nullptr && out_path != nullptr, "null path");
    auto s = p2t::workflow::expand_file(templates_path, variants, seed, out_path);
    set(n_templates, s.templates);
    set(n_records, s.records);
  });
}

p2t_status p2t_datagen_paraphrase(p2t_backend* backend, const char* in_path, int per, int include_originals,
                                  const char* out_path, const char* rejects_path, size_t* n_inputs,
                                  size_t* n_written, size_t* n_rejects) {
  return guarded([&] {
    require(backend != nullptr && in_path != nullptr && out_path != nullptr, "null argument");
    p2t::ParaphraseOptions options;
    options.max_in_flight = backend->max_in_flight;
    options.retry = backend->retry;
    auto s = p2t::workflow::paraphrase_file(in_path, per, *backend->backend, backend->params, options,
                                            include_originals != 0, out_path, opt(rejects_path));
    set(n_inputs, s.inputs);
    set(n_written, s.written);
    set(n_rejects, s.rejects);
  });
}

p2t_status p2t_datagen_split(const char* in_path, size_t train, size_t valid, size_t test, uint64_t seed,
                             p2t_split_mode mode, const char* out_path, size_t* n_total, size_t* n_assigned) {
  return guarded([&] {
    require(in_path != nullptr && out_path != nullptr, "null path");
    p2t::SplitSpec spec{train, valid, test, seed,
                        mode == P2T_SPLIT_GROUP_BY_BASE ? p2t::SplitMode::kGroupByBase : p2t::SplitMode::kRecordRandom};
    auto s = p2t::workflow::split_file(in_path, spec, out_path);
    set(n_total, s.total);
    set(n_assigned, s.train + s.valid + s.test);
  });
}

p2t_status p2t_datagen_export(const char* in_path, const char* out_dir, size_t* n_train, size_t* n_valid,
                              size_t* n_test) {
  return guarded([&] {
    require(in_path != nullptr && out_dir != nullptr, "null path");
    auto s = p2t::workflow::export_file(in_path, out_dir);
    set(n_train, s.train);
    set(n_valid, s.valid);
    set(n_test, s.test);
  });
}

// ---- extraction and evaluation ----

void p2t_extract_options_init(p2t_extract_options* opts) {
  if (opts == nullptr) return;
  *opts = p2t_extract_options{};
  opts->mode = P2T_MODE_ZERO_SHOT;
  opts->per_relation = p2t::kDefaultExamplesPerRelation;
}

p2t_status p2t_extract(p2t_backend* backend, const p2t_vocabulary* vocab, const p2t_extract_options* opts,
                       const char* dataset_path, const char* out_path, size_t* n_total, size_t* n_requested,
                       size_t* n_backend_errors) {
  return guarded([&] {
    require(backend != nullptr && vocab != nullptr && opts != nullptr, "null argument");
    require(dataset_path != nullptr && out_path != nullptr, "null path");
    p2t::workflow::ExtractConfig config;
    switch (opts->mode) {
      case P2T_MODE_ZERO_SHOT: config.mode = p2t::PromptMode::kZeroShot; break;
      case P2T_MODE_FEW_SHOT: config.mode = p2t::PromptMode::kFewShot; break;
      case P2T_MODE_FINETUNED: config.mode = p2t::PromptMode::kFinetuned; break;
      default: require(false, "unknown mode");
    }
    if (config.mode == p2t::PromptMode::kFewShot) {
      require(opts->bank_path != nullptr, "few_shot mode requires an example bank");
      config.bank = p2t::load_example_bank(opts->bank_path, &vocab->vocab);
    }
    if (opts->template_path != nullptr) config.instructions = p2t::InstructionTemplate::load(opts->template_path);
    if (opts->cues_path != nullptr) config.cues = p2t::CueList::load(opts->cues_path);
    config.per_relation = opts->per_relation;
    config.params = backend->params;
    config.max_in_flight = backend->max_in_flight;
    config.retry = backend->retry;
    auto s = p2t::workflow::extract_file(config, vocab->vocab, *backend->backend, dataset_path, out_path);
    set(n_total, s.total);
    set(n_requested, s.requested);
    set(n_backend_errors, s.backend_errors);
  });
}

p2t_status p2t_evaluate(const char* outcomes_path, const char* gold_path, const p2t_vocabulary* vocab,
                        p2t_f1_mode mode, const char* out_dir, const char* method_label, p2t_eval** out) {
  return guarded([&] {
    require(outcomes_path != nullptr && gold_path != nullptr && vocab != nullptr && out != nullptr, "null argument");
    auto res = p2t::workflow::evaluate_files(
        outcomes_path, gold_path, vocab->vocab,
        mode == P2T_F1_MEAN_OF_PER_CLASS ? p2t::F1Mode::kMeanOfPerClass : p2t::F1Mode::kHarmonicOfMacro,
        opt(out_dir), method_label == nullptr ? "run" : method_label);
    *out = new p2t_eval{std::move(res)};
  });
}

void p2t_eval_free(p2t_eval* eval) { delete eval; }

const char* p2t_eval_table(const p2t_eval* eval) { return eval == nullptr ? "" : eval->result.table.c_str(); }

void p2t_eval_metrics(const p2t_eval* eval, p2t_protocol protocol, double* precision, double* recall, double* f1) {
  if (eval == nullptr) return;
  const auto& m = protocol == P2T_PROTOCOL_TRIPLE ? eval->result.run.triple.metrics : eval->result.run.relation.metrics;
  set(precision, m.precision);
  set(recall, m.recall);
  set(f1, m.f1);
}

void p2t_eval_verdict_totals(const p2t_eval* eval, p2t_protocol protocol, long* tp, long* fp, long* fn) {
  if (eval == nullptr) return;
  const auto& counts =
      protocol == P2T_PROTOCOL_TRIPLE ? eval->result.run.triple.counts : eval->result.run.relation.counts;
  long t = 0, p = 0, n = 0;
  for (const auto& [_, c] : counts.per_relation) {
    t += c.tp;
    p += c.fp;
    n += c.fn;
  }
  set(tp, t);
  set(fp, p);
  set(fn, n);
}

}  // extern "C"
