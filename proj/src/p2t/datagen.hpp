#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "p2t/backend.hpp"
#include "p2t/io.hpp"

namespace p2t {

// One hand-written prompt/response pair with a {DATE} slot.
struct PromptTemplate {
  std::string id;
  std::string relation;
  std::string prompt_pattern;    // contains {DATE} exactly once
  std::string response_pattern;  // serialized triple; may use {SUBJ_GT} and {DATE}
  std::string subject_gt;
};

enum class Split { kTrain, kValid, kTest };
const char* split_name(Split s);
std::optional<Split> split_from(std::string_view name);

struct DatasetRecord {
  std::string id;
  std::string base_id;
  int variant = 0;
  int paraphrase = 0;  // 0 = original wording
  std::string prompt;
  std::string response;
  std::string relation;
  std::string subject_gt;
  std::string object_gt;
  std::optional<Split> split;

  Json to_json() const;
  static DatasetRecord from_json(const Json& j, long line = 0);
};

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path);
std::string dataset_jsonl(const std::vector<DatasetRecord>& records);
void save_dataset(const std::filesystem::path& path, const std::vector<DatasetRecord>& records);

std::string make_record_id(std::string_view base_id, int variant, int paraphrase);

// Schema(line, field) on malformed lines, DuplicateId on repeated ids.
std::vector<PromptTemplate> load_templates(const std::filesystem::path& path);

struct YearRange {
  int first;
  int last;
};

struct DateRanges {
  YearRange birthday{1940, 2010};
  YearRange anniversary{1960, 2023};
  YearRange other{1940, 2023};

  YearRange for_relation(std::string_view relation) const;
};

struct CalendarDate {
  int year;
  int month;  // 1..12
  int day;
};

enum class DateFormat { kMonthDayYear, kMonthOrdinal, kDayMonthYear, kSlashed, kYearOnly };
constexpr int kDateFormatCount = 5;

// "November 14, 1979" / "November 14th" / "14 November 1979" / "14/11/1979" / "1979"
std::string render_date(const CalendarDate& date, DateFormat format);

// Substitutes the placeholders and checks the response parses back to the
// ground-truth triple.
DatasetRecord instantiate_template(const PromptTemplate& tmpl, int variant, std::string_view date_text);

std::vector<DatasetRecord> expand_templates(const std::vector<PromptTemplate>& templates, int variants_per_template,
                                            std::uint64_t seed, const DateRanges& ranges = DateRanges());

struct ParaphraseReject {
  std::string record_id;
  int paraphrase;
  int attempts;
  std::string reason;
};

struct ParaphraseResult {
  std::vector<DatasetRecord> records;  // per input: original, then paraphrases 1..n
  std::vector<ParaphraseReject> rejects;
};

struct ParaphraseOptions {
  int attempts = 3;
  int max_in_flight = 1;
  RetryPolicy retry;
};

constexpr std::string_view kFallbackSuffix = "-fallback";

PromptBundle build_paraphrase_bundle(const DatasetRecord& record, int paraphrase, int total, int attempt);

// First non-empty line with wrapping quotes removed.
std::string clean_paraphrase(std::string_view completion);

// Every normalized token of object_gt appears in the paraphrase.
bool retains_date(std::string_view paraphrase, std::string_view object_gt);

ParaphraseResult paraphrase_records(const std::vector<DatasetRecord>& records, int paraphrases_per, Backend& backend,
                                    const GenerationParams& params, const ParaphraseOptions& options = {});

std::string rejects_jsonl(const std::vector<ParaphraseReject>& rejects);

enum class SplitMode { kRecordRandom, kGroupByBase };
const char* split_mode_name(SplitMode m);
std::optional<SplitMode> split_mode_from(std::string_view name);

struct SplitSpec {
  size_t train = 0;
  size_t valid = 0;
  size_t test = 0;
  std::uint64_t seed = 0;
  SplitMode mode = SplitMode::kRecordRandom;
};

// Returns the records in input order with `split` reassigned; records left
// out of all three splits have no split.
std::vector<DatasetRecord> split_records(std::vector<DatasetRecord> records, const SplitSpec& spec);

struct FinetuneManifest {
  std::string optimizer = "adam";
  double learning_rate = 1e-5;
  int layers_to_finetune = 16;
  int minibatch_size = 4;
  int iterations = 1000;
  std::string dataset_fingerprint;

  Json to_json() const;
};

struct ExportSummary {
  size_t train = 0;
  size_t valid = 0;
  size_t test = 0;
  FinetuneManifest manifest;
};

// train/valid/test.jsonl in chat format plus manifest.json.
ExportSummary export_finetune(const std::vector<DatasetRecord>& records, const std::filesystem::path& out_dir);

// Seeded generator with a portable bounded draw.
class StableRng {
 public:
  explicit StableRng(std::uint64_t seed);
  std::uint64_t next();
  // Uniform in [0, n).
  std::uint64_t below(std::uint64_t n);
  int between(int lo, int hi);  // inclusive

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace p2t
