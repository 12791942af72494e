#include "p2t/datagen.hpp"

#include <array>
#include <limits>
#include <map>
#include <set>

#include "p2t/core_model.hpp"
#include "p2t/parser.hpp"

namespace p2t {

namespace fs = std::filesystem;

// ---- records --------------------------------------------------------------

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "train";
}

std::optional<Split> split_from(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "valid") return Split::kValid;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

Json DatasetRecord::to_json() const {
  Json j{{"id", id},
         {"base_id", base_id},
         {"variant", variant},
         {"paraphrase", paraphrase},
         {"prompt", prompt},
         {"response", response},
         {"relation", relation},
         {"subject_gt", subject_gt},
         {"object_gt", object_gt}};
  if (split) j["split"] = split_name(*split);
  return j;
}

DatasetRecord DatasetRecord::from_json(const Json& j, long line) {
  DatasetRecord r;
  r.id = require_string(j, "id", line);
  r.base_id = optional_string(j, "base_id", line);
  r.variant = j.contains("variant") ? static_cast<int>(require_int(j, "variant", line)) : 0;
  r.paraphrase = j.contains("paraphrase") ? static_cast<int>(require_int(j, "paraphrase", line)) : 0;
  r.prompt = require_string(j, "prompt", line);
  r.response = optional_string(j, "response", line);
  r.relation = require_string(j, "relation", line);
  r.subject_gt = optional_string(j, "subject_gt", line);
  r.object_gt = require_string(j, "object_gt", line);
  std::string split = optional_string(j, "split", line);
  if (!split.empty()) {
    r.split = split_from(split);
    if (!r.split) {
      Error e(Errc::kSchema, "line " + std::to_string(line) + ": unknown split '" + split + "'");
      e.line = line;
      e.detail = "split";
      throw e;
    }
  }
  return r;
}

std::vector<DatasetRecord> load_dataset(const fs::path& path) {
  std::vector<DatasetRecord> out;
  std::set<std::string> ids;
  for_each_jsonl(path, [&](long line, const Json& j) {
    out.push_back(DatasetRecord::from_json(j, line));
    if (!ids.insert(out.back().id).second) {
      Error e(Errc::kDuplicateId, path.string() + ":" + std::to_string(line) + ": duplicate id " + out.back().id);
      e.line = line;
      e.detail = out.back().id;
      throw e;
    }
  });
  return out;
}

std::string dataset_jsonl(const std::vector<DatasetRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.to_json().dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const fs::path& path, const std::vector<DatasetRecord>& records) {
  write_file_atomic(path, dataset_jsonl(records));
}

std::string make_record_id(std::string_view base_id, int variant, int paraphrase) {
  return std::string(base_id) + "-v" + std::to_string(variant) + "-p" + std::to_string(paraphrase);
}

// ---- templates ------------------------------------------------------------

namespace {

Error schema_error(long line, const std::string& field, const std::string& what) {
  Error e(Errc::kSchema, "line " + std::to_string(line) + ": " + field + ": " + what);
  e.line = line;
  e.detail = field;
  return e;
}

size_t count_occurrences(std::string_view text, std::string_view needle) {
  size_t n = 0;
  for (size_t pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + needle.size())) ++n;
  return n;
}

std::string escape_quotes(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out;
}

}  // namespace

std::vector<PromptTemplate> load_templates(const fs::path& path) {
  std::vector<PromptTemplate> out;
  std::set<std::string> ids;
  for_each_jsonl(path, [&](long line, const Json& j) {
    PromptTemplate t{require_string(j, "id", line), require_string(j, "relation", line),
                     require_string(j, "prompt_pattern", line), require_string(j, "response_pattern", line),
                     require_string(j, "subject_gt", line)};
    if (trim(t.id).empty()) throw schema_error(line, "id", "empty");
    if (trim(t.relation).empty()) throw schema_error(line, "relation", "empty");
    if (trim(t.subject_gt).empty()) throw schema_error(line, "subject_gt", "empty");
    if (count_occurrences(t.prompt_pattern, "{DATE}") != 1) {
      throw schema_error(line, "prompt_pattern", "must contain {DATE} exactly once");
    }
    if (count_occurrences(t.response_pattern, "{DATE}") != 1) {
      throw schema_error(line, "response_pattern", "must contain {DATE} exactly once");
    }
    try {
      instantiate_template(t, 0, "November 14, 1979");
    } catch (const Error& e) {
      throw schema_error(line, "response_pattern", e.what());
    }
    if (!ids.insert(t.id).second) {
      Error e(Errc::kDuplicateId, "line " + std::to_string(line) + ": duplicate template id " + t.id);
      e.line = line;
      e.detail = t.id;
      throw e;
    }
    out.push_back(std::move(t));
  });
  return out;
}

DatasetRecord instantiate_template(const PromptTemplate& tmpl, int variant, std::string_view date_text) {
  DatasetRecord r;
  r.base_id = tmpl.id;
  r.variant = variant;
  r.paraphrase = 0;
  r.id = make_record_id(tmpl.id, variant, 0);
  r.relation = tmpl.relation;
  r.subject_gt = tmpl.subject_gt;
  r.object_gt = std::string(date_text);
  r.prompt = tmpl.prompt_pattern;
  replace_all(r.prompt, "{DATE}", date_text);
  r.response = tmpl.response_pattern;
  replace_all(r.response, "{SUBJ_GT}", escape_quotes(tmpl.subject_gt));
  replace_all(r.response, "{DATE}", escape_quotes(date_text));

  ParsedResponse parsed = parse_response(r.response);
  Triple expected{r.subject_gt, r.relation, r.object_gt};
  if (parsed.kind != OutcomeKind::kExtracted || parsed.quad->relation ||
      Triple{parsed.quad->subject, parsed.quad->predicate, parsed.quad->object} != expected) {
    throw Error(Errc::kSchema, "response '" + r.response + "' does not parse to " + serialize_triple(expected));
  }
  return r;
}

// ---- dates ----------------------------------------------------------------

StableRng::StableRng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t StableRng::next() { return engine_(); }

std::uint64_t StableRng::below(std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - (max % n);
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return x % n;
}

int StableRng::between(int lo, int hi) {
  return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
}

YearRange DateRanges::for_relation(std::string_view relation) const {
  if (iequals(relation, "birthday")) return birthday;
  if (iequals(relation, "anniversary")) return anniversary;
  return other;
}

namespace {

constexpr std::array<const char*, 12> kMonths = {"January", "February", "March",     "April",   "May",      "June",
                                                 "July",    "August",   "September", "October", "November", "December"};

int days_in_month(int year, int month) {
  static constexpr std::array<int, 12> days = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  return month == 2 && leap ? 29 : days[static_cast<size_t>(month - 1)];
}

std::string ordinal(int day) {
  const char* suffix = "th";
  if (day % 100 < 11 || day % 100 > 13) {
    switch (day % 10) {
      case 1: suffix = "st"; break;
      case 2: suffix = "nd"; break;
      case 3: suffix = "rd"; break;
      default: break;
    }
  }
  return std::to_string(day) + suffix;
}

std::string two_digits(int v) { return (v < 10 ? "0" : "") + std::to_string(v); }

}  // namespace

std::string render_date(const CalendarDate& d, DateFormat format) {
  const std::string month = kMonths.at(static_cast<size_t>(d.month - 1));
  switch (format) {
    case DateFormat::kMonthDayYear: return month + " " + std::to_string(d.day) + ", " + std::to_string(d.year);
    case DateFormat::kMonthOrdinal: return month + " " + ordinal(d.day);
    case DateFormat::kDayMonthYear: return std::to_string(d.day) + " " + month + " " + std::to_string(d.year);
    case DateFormat::kSlashed: return two_digits(d.day) + "/" + two_digits(d.month) + "/" + std::to_string(d.year);
    case DateFormat::kYearOnly: return std::to_string(d.year);
  }
  return std::to_string(d.year);
}

std::vector<DatasetRecord> expand_templates(const std::vector<PromptTemplate>& templates, int variants_per_template,
                                            std::uint64_t seed, const DateRanges& ranges) {
  if (variants_per_template < 1) throw Error(Errc::kInvalidArgument, "variants_per_template must be >= 1");
  StableRng rng(seed);
  std::vector<DatasetRecord> out;
  out.reserve(templates.size() * static_cast<size_t>(variants_per_template));
  for (const auto& t : templates) {
    YearRange years = ranges.for_relation(t.relation);
    for (int v = 0; v < variants_per_template; ++v) {
      CalendarDate d;
      d.year = rng.between(years.first, years.last);
      d.month = rng.between(1, 12);
      d.day = rng.between(1, days_in_month(d.year, d.month));
      auto format = static_cast<DateFormat>(rng.below(kDateFormatCount));
      out.push_back(instantiate_template(t, v, render_date(d, format)));
    }
  }
  return out;
}

// ---- paraphrasing ---------------------------------------------------------

PromptBundle build_paraphrase_bundle(const DatasetRecord& record, int paraphrase, int total, int attempt) {
  PromptBundle b;
  b.mode = PromptMode::kParaphrase;
  b.messages.push_back(
      {Role::kSystem,
       "Rewrite the user's sentence with different wording and sentence structure while keeping its meaning. "
       "Keep every date, day, month and year exactly as written. Reply with the rewritten sentence only."});
  b.messages.push_back({Role::kUser, "Paraphrase " + std::to_string(paraphrase) + " of " + std::to_string(total) +
                                         ", attempt " + std::to_string(attempt) + ":\n" + record.prompt});
  return b;
}

std::string clean_paraphrase(std::string_view completion) {
  std::string line;
  size_t pos = 0;
  while (pos <= completion.size()) {
    size_t nl = completion.find('\n', pos);
    size_t end = nl == std::string_view::npos ? completion.size() : nl;
    line = trim(completion.substr(pos, end - pos));
    if (!line.empty() || nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (line.size() >= 2 && (line.front() == '"' || line.front() == '\'') && line.back() == line.front()) {
    line = trim(std::string_view(line).substr(1, line.size() - 2));
  }
  return line;
}

bool retains_date(std::string_view paraphrase, std::string_view object_gt) {
  auto have = normalize_term(paraphrase).tokens;
  std::set<std::string> present(have.begin(), have.end());
  for (const auto& tok : normalize_term(object_gt).tokens) {
    if (!present.count(tok)) return false;
  }
  return true;
}

ParaphraseResult paraphrase_records(const std::vector<DatasetRecord>& records, int paraphrases_per, Backend& backend,
                                    const GenerationParams& params, const ParaphraseOptions& options) {
  if (paraphrases_per < 0) throw Error(Errc::kInvalidArgument, "paraphrases_per must be >= 0");
  if (options.attempts < 1) throw Error(Errc::kInvalidArgument, "paraphrase attempts must be >= 1");

  struct Slot {
    size_t record;
    int paraphrase;
    std::optional<std::string> text;
    std::string last_reason;
  };
  std::vector<Slot> slots;
  for (size_t i = 0; i < records.size(); ++i) {
    for (int k = 1; k <= paraphrases_per; ++k) slots.push_back({i, k, std::nullopt, {}});
  }

  for (int attempt = 1; attempt <= options.attempts; ++attempt) {
    std::vector<size_t> pending;
    std::vector<PromptBundle> bundles;
    for (size_t s = 0; s < slots.size(); ++s) {
      if (slots[s].text) continue;
      pending.push_back(s);
      bundles.push_back(build_paraphrase_bundle(records[slots[s].record], slots[s].paraphrase, paraphrases_per, attempt));
    }
    if (pending.empty()) break;
    auto results = complete_batch(backend, bundles, params, options.max_in_flight, options.retry);
    for (size_t p = 0; p < pending.size(); ++p) {
      Slot& slot = slots[pending[p]];
      if (!results[p].ok()) {
        slot.last_reason = std::string(errc_name(results[p].error->code())) + ": " + results[p].error->what();
        continue;
      }
      std::string text = clean_paraphrase(results[p].completion->text);
      if (text.empty()) {
        slot.last_reason = "empty paraphrase";
      } else if (!retains_date(text, records[slot.record].object_gt)) {
        slot.last_reason = "paraphrase dropped date tokens: " + text;
      } else {
        slot.text = std::move(text);
      }
    }
  }

  ParaphraseResult out;
  out.records.reserve(records.size() * static_cast<size_t>(paraphrases_per + 1));
  size_t s = 0;
  for (const auto& rec : records) {
    out.records.push_back(rec);
    for (int k = 1; k <= paraphrases_per; ++k, ++s) {
      DatasetRecord para = rec;
      para.paraphrase = k;
      para.split.reset();
      para.id = make_record_id(rec.base_id, rec.variant, k);
      if (slots[s].text) {
        para.prompt = *slots[s].text;
      } else {
        para.id += kFallbackSuffix;
        out.rejects.push_back({para.id, k, options.attempts, slots[s].last_reason});
      }
      out.records.push_back(std::move(para));
    }
  }
  return out;
}

std::string rejects_jsonl(const std::vector<ParaphraseReject>& rejects) {
  std::string out;
  for (const auto& r : rejects) {
    out += Json{{"record_id", r.record_id}, {"paraphrase", r.paraphrase}, {"attempts", r.attempts}, {"reason", r.reason}}
               .dump();
    out += '\n';
  }
  return out;
}

// ---- splitting ------------------------------------------------------------

const char* split_mode_name(SplitMode m) {
  return m == SplitMode::kGroupByBase ? "group_by_base" : "record_random";
}

std::optional<SplitMode> split_mode_from(std::string_view name) {
  if (name == "record_random") return SplitMode::kRecordRandom;
  if (name == "group_by_base") return SplitMode::kGroupByBase;
  return std::nullopt;
}

std::vector<DatasetRecord> split_records(std::vector<DatasetRecord> records, const SplitSpec& spec) {
  const size_t wanted = spec.train + spec.valid + spec.test;
  auto infeasible = [&](const std::string& why) {
    return Error(Errc::kInfeasibleSplit, "split " + std::to_string(spec.train) + "/" + std::to_string(spec.valid) +
                                             "/" + std::to_string(spec.test) + " infeasible: " + why);
  };
  if (wanted > records.size()) {
    throw infeasible("only " + std::to_string(records.size()) + " records");
  }
  {
    std::set<std::string> ids;
    for (const auto& r : records) {
      if (!ids.insert(r.id).second) throw Error(Errc::kDuplicateId, "duplicate record id " + r.id);
    }
  }
  for (auto& r : records) r.split.reset();
  const std::array<std::pair<Split, size_t>, 3> targets = {
      {{Split::kTrain, spec.train}, {Split::kValid, spec.valid}, {Split::kTest, spec.test}}};
  StableRng rng(spec.seed);

  if (spec.mode == SplitMode::kRecordRandom) {
    std::vector<size_t> order(records.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    size_t cursor = 0;
    for (const auto& [split, count] : targets) {
      for (size_t n = 0; n < count; ++n) records[order[cursor++]].split = split;
    }
    return records;
  }

  // Whole base_id groups go to one split; the last group taken for a split is
  // trimmed to hit the exact count and its remainder stays unassigned.
  std::vector<std::string> group_names;
  std::map<std::string, std::vector<size_t>> groups;
  for (size_t i = 0; i < records.size(); ++i) {
    const std::string& key = records[i].base_id.empty() ? records[i].id : records[i].base_id;
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) group_names.push_back(key);
    it->second.push_back(i);
  }
  rng.shuffle(group_names);
  size_t next_group = 0;
  for (const auto& [split, count] : targets) {
    size_t need = count;
    while (need > 0) {
      if (next_group == group_names.size()) throw infeasible("ran out of base_id groups");
      for (size_t idx : groups[group_names[next_group++]]) {
        if (need == 0) break;
        records[idx].split = split;
        --need;
      }
    }
  }
  return records;
}

// ---- export ---------------------------------------------------------------

Json FinetuneManifest::to_json() const {
  return Json{{"optimizer", optimizer},
              {"learning_rate", learning_rate},
              {"layers_to_finetune", layers_to_finetune},
              {"minibatch_size", minibatch_size},
              {"iterations", iterations},
              {"dataset_fingerprint", dataset_fingerprint},
              {"system_message", false},
              {"method", "qlora"}};
}

ExportSummary export_finetune(const std::vector<DatasetRecord>& records, const fs::path& out_dir) {
  std::array<std::string, 3> files;
  ExportSummary summary;
  bool any = false;
  for (const auto& r : records) {
    if (!r.split) continue;
    any = true;
    Json messages = Json::array();
    for (const auto& m : build_finetune_messages(r)) {
      messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
    }
    files[static_cast<size_t>(*r.split)] += Json{{"messages", messages}}.dump() + "\n";
    switch (*r.split) {
      case Split::kTrain: ++summary.train; break;
      case Split::kValid: ++summary.valid; break;
      case Split::kTest: ++summary.test; break;
    }
  }
  if (!any && !records.empty()) throw Error(Errc::kMissingSplit, "no record has a split assigned");

  std::string all;
  for (size_t i = 0; i < files.size(); ++i) {
    all += split_name(static_cast<Split>(i));
    all += '\n';
    all += files[i];
  }
  summary.manifest.dataset_fingerprint = fnv1a_hex(all);
  for (size_t i = 0; i < files.size(); ++i) {
    write_file_atomic(out_dir / (std::string(split_name(static_cast<Split>(i))) + ".jsonl"), files[i]);
  }
  write_file_atomic(out_dir / "manifest.json", summary.manifest.to_json().dump(2) + "\n");
  return summary;
}

}  // namespace p2t
