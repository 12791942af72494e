#include "p2t/prompting.hpp"

#include "p2t/datagen.hpp"
#include "p2t/error.hpp"
#include "p2t/io.hpp"
#include "p2t/parser.hpp"

namespace p2t {

const char* role_name(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

const char* prompt_mode_name(PromptMode mode) {
  switch (mode) {
    case PromptMode::kZeroShot: return "zero_shot";
    case PromptMode::kFewShot: return "few_shot";
    case PromptMode::kFinetuned: return "finetuned";
    case PromptMode::kParaphrase: return "paraphrase";
  }
  return "zero_shot";
}

std::optional<PromptMode> prompt_mode_from(std::string_view name) {
  if (name == "zero_shot") return PromptMode::kZeroShot;
  if (name == "few_shot") return PromptMode::kFewShot;
  if (name == "finetuned") return PromptMode::kFinetuned;
  if (name == "paraphrase") return PromptMode::kParaphrase;
  return std::nullopt;
}

const std::string& PromptBundle::final_user_text() const {
  static const std::string empty;
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == Role::kUser) return it->content;
  }
  return empty;
}

std::vector<FewShotExample> load_example_bank(const std::filesystem::path& path, const Vocabulary* vocab) {
  std::vector<FewShotExample> bank;
  for_each_jsonl(path, [&](long line, const Json& j) {
    FewShotExample ex{require_string(j, "relation", line), require_string(j, "prompt_text", line),
                      require_string(j, "expected_output", line)};
    if (vocab != nullptr && !vocab->contains(ex.relation)) {
      Error e(Errc::kSchema, "line " + std::to_string(line) + ": relation '" + ex.relation + "' not in vocabulary");
      e.line = line;
      e.detail = "relation";
      throw e;
    }
    bank.push_back(std::move(ex));
  });
  return bank;
}

namespace {

constexpr std::string_view kExamplesMarker = "{examples}";

constexpr std::string_view kZeroShotText =
    "You turn a single user sentence into a knowledge quadruple of the form\n"
    "('subject', 'verb-predicate', 'object', 'relation').\n"
    "The fourth term, 'relation', must be exactly one of these predefined relations:\n"
    "{relations}\n"
    "Use the verb of the sentence for the verb-predicate term and put the matching relation name in the "
    "relation term. Answer with the quadruple only, every term in single quotes.\n"
    "If the sentence does not fit any of the predefined relations, do not produce a quadruple; say that the "
    "sentence is out of context and give a short justification.\n"
    "{examples}\n"
    "{user_prompt}";

constexpr std::string_view kFewShotText =
    "You turn a single user sentence into a knowledge quadruple of the form\n"
    "('subject', 'verb-predicate', 'object', 'relation').\n"
    "The fourth term, 'relation', must be exactly one of these predefined relations:\n"
    "{relations}\n"
    "Follow the format of the worked examples. If the sentence does not fit any of the predefined "
    "relations, say that the sentence is out of context and give a short justification.\n"
    "{examples}\n"
    "{user_prompt}";

std::string render_relations(const Vocabulary& vocab) {
  std::string out;
  for (const auto& r : vocab.relations()) {
    if (!out.empty()) out += '\n';
    out += "- " + r.name;
    if (!r.description.empty()) out += ": " + r.description;
  }
  return out;
}

Error template_error(const std::string& what) { return Error(Errc::kTemplate, "prompt template: " + what); }

void require_user_prompt(std::string_view user_prompt) {
  if (trim(user_prompt).empty()) throw Error(Errc::kEmptyPrompt, "user prompt is empty");
}

}  // namespace

InstructionTemplate InstructionTemplate::parse(std::string_view text) {
  // Locate the marker as a whole line.
  size_t pos = 0;
  size_t marker = std::string_view::npos;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    size_t end = nl == std::string_view::npos ? text.size() : nl;
    if (trim(text.substr(pos, end - pos)) == kExamplesMarker) {
      if (marker != std::string_view::npos) throw template_error("{examples} appears more than once");
      marker = pos;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (marker == std::string_view::npos) throw template_error("missing {examples} line");
  size_t after = text.find('\n', marker);
  InstructionTemplate t;
  t.system_ = trim(text.substr(0, marker));
  t.user_ = after == std::string_view::npos ? std::string() : trim(text.substr(after + 1));
  if (t.system_.find("{relations}") == std::string::npos) throw template_error("missing {relations} in system section");
  if (t.user_.find("{user_prompt}") == std::string::npos) throw template_error("missing {user_prompt} in user section");
  return t;
}

InstructionTemplate InstructionTemplate::load(const std::filesystem::path& path) { return parse(read_file(path)); }

const InstructionTemplate& InstructionTemplate::default_zero_shot() {
  static const InstructionTemplate t = parse(kZeroShotText);
  return t;
}

const InstructionTemplate& InstructionTemplate::default_few_shot() {
  static const InstructionTemplate t = parse(kFewShotText);
  return t;
}

std::string InstructionTemplate::render_system(const Vocabulary& vocab) const {
  std::string out = system_;
  replace_all(out, "{relations}", render_relations(vocab));
  return out;
}

std::string InstructionTemplate::render_user(std::string_view user_prompt) const {
  // Single pass so a prompt containing "{user_prompt}" is not re-expanded.
  std::string out;
  constexpr std::string_view key = "{user_prompt}";
  size_t pos = 0;
  while (true) {
    size_t hit = user_.find(key, pos);
    if (hit == std::string::npos) break;
    out.append(user_, pos, hit - pos);
    out.append(user_prompt);
    pos = hit + key.size();
  }
  out.append(user_, pos);
  return out;
}

PromptBundle build_zero_shot(const Vocabulary& vocab, std::string_view user_prompt, const InstructionTemplate& tmpl) {
  require_user_prompt(user_prompt);
  PromptBundle b;
  b.mode = PromptMode::kZeroShot;
  b.vocabulary_fingerprint = vocab.fingerprint();
  b.messages.push_back({Role::kSystem, tmpl.render_system(vocab)});
  b.messages.push_back({Role::kUser, tmpl.render_user(user_prompt)});
  return b;
}

PromptBundle build_few_shot(const Vocabulary& vocab, const std::vector<FewShotExample>& bank, int per_relation,
                            std::string_view user_prompt, const InstructionTemplate& tmpl) {
  if (per_relation < 1) throw Error(Errc::kInvalidArgument, "per_relation must be >= 1");
  PromptBundle b;
  b.mode = PromptMode::kFewShot;
  b.vocabulary_fingerprint = vocab.fingerprint();
  b.messages.push_back({Role::kSystem, tmpl.render_system(vocab)});
  for (const auto& rel : vocab.relations()) {
    int taken = 0;
    for (const auto& ex : bank) {
      if (taken == per_relation) break;
      if (!iequals(ex.relation, rel.name)) continue;
      b.messages.push_back({Role::kUser, tmpl.render_user(ex.prompt_text)});
      b.messages.push_back({Role::kAssistant, ex.expected_output});
      ++taken;
    }
    if (taken < per_relation) {
      Error e(Errc::kMissingExamples, "example bank has " + std::to_string(taken) + " of " +
                                          std::to_string(per_relation) + " examples for relation '" + rel.name + "'");
      e.detail = rel.name;
      throw e;
    }
  }
  require_user_prompt(user_prompt);
  b.messages.push_back({Role::kUser, tmpl.render_user(user_prompt)});
  return b;
}

PromptBundle build_finetuned(const Vocabulary& vocab, std::string_view user_prompt) {
  require_user_prompt(user_prompt);
  PromptBundle b;
  b.mode = PromptMode::kFinetuned;
  b.vocabulary_fingerprint = vocab.fingerprint();
  b.messages.push_back({Role::kUser, std::string(user_prompt)});
  return b;
}

std::vector<ChatMessage> build_finetune_messages(const DatasetRecord& record) {
  Triple gt{record.subject_gt, record.relation, record.object_gt};
  if (!gt.valid()) {
    Error e(Errc::kMissingGroundTruth, "record " + record.id + " has no complete ground-truth triple");
    e.detail = record.id;
    throw e;
  }
  return {{Role::kUser, record.prompt}, {Role::kAssistant, serialize_triple(gt)}};
}

}  // namespace p2t
