#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "p2t/core_model.hpp"

namespace p2t {

struct DatasetRecord;

enum class Role { kSystem, kUser, kAssistant };
const char* role_name(Role role);

struct ChatMessage {
  Role role;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

// kParaphrase bundles drive the dataset paraphrasing stage; the other three
// are extraction modes.
enum class PromptMode { kZeroShot, kFewShot, kFinetuned, kParaphrase };
const char* prompt_mode_name(PromptMode mode);
std::optional<PromptMode> prompt_mode_from(std::string_view name);

struct PromptBundle {
  std::vector<ChatMessage> messages;
  PromptMode mode = PromptMode::kZeroShot;
  std::string vocabulary_fingerprint;

  // Content of the last user message; the replay-tape key uses it.
  const std::string& final_user_text() const;

  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

struct FewShotExample {
  std::string relation;
  std::string prompt_text;
  std::string expected_output;
};

// JSONL with keys relation, prompt_text, expected_output. When `vocab` is
// given every example's relation must belong to it.
std::vector<FewShotExample> load_example_bank(const std::filesystem::path& path,
                                              const Vocabulary* vocab = nullptr);

// A prompt template: a system section, a line holding only `{examples}`, then a
// user section. {relations} must occur in the system section and
// {user_prompt} in the user section.
class InstructionTemplate {
 public:
  static InstructionTemplate parse(std::string_view text);
  static InstructionTemplate load(const std::filesystem::path& path);

  static const InstructionTemplate& default_zero_shot();
  static const InstructionTemplate& default_few_shot();

  std::string render_system(const Vocabulary& vocab) const;
  std::string render_user(std::string_view user_prompt) const;

 private:
  std::string system_;
  std::string user_;
};

constexpr int kDefaultExamplesPerRelation = 2;

PromptBundle build_zero_shot(const Vocabulary& vocab, std::string_view user_prompt,
                             const InstructionTemplate& tmpl = InstructionTemplate::default_zero_shot());

PromptBundle build_few_shot(const Vocabulary& vocab, const std::vector<FewShotExample>& bank, int per_relation,
                            std::string_view user_prompt,
                            const InstructionTemplate& tmpl = InstructionTemplate::default_few_shot());

// A fine-tuned model already knows the relation set: one user message only.
PromptBundle build_finetuned(const Vocabulary& vocab, std::string_view user_prompt);

// Chat pair used as one supervised fine-tuning sample.
std::vector<ChatMessage> build_finetune_messages(const DatasetRecord& record);

}  // namespace p2t
