#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "p2t/error.hpp"
#include "p2t/prompting.hpp"

namespace p2t {

struct GenerationParams {
  std::string model = "mistral-7b-instruct-v0.2";
  double temperature = 0.0;
  int max_tokens = 256;
  std::chrono::milliseconds timeout{60000};
  std::optional<std::int64_t> seed;

  void validate() const;
};

struct Completion {
  std::string text;
  std::chrono::milliseconds latency{0};
  std::string request_id;
};

// Process-unique request id ("req-<n>").
std::string next_request_id();

class Backend {
 public:
  virtual ~Backend() = default;
  // Blocking; safe to call from several threads. Throws Error.
  virtual Completion complete(const PromptBundle& bundle, const GenerationParams& params) = 0;
};

// OpenAI-compatible chat-completions endpoint.
class HttpBackend : public Backend {
 public:
  // base_url like "http://127.0.0.1:8080" (optionally with a path prefix).
  // An empty api_key falls back to the P2T_API_KEY environment variable.
  explicit HttpBackend(std::string base_url, std::string api_key = {});

  Completion complete(const PromptBundle& bundle, const GenerationParams& params) override;

  static std::string request_body(const PromptBundle& bundle, const GenerationParams& params);
  // Extracts choices[0].message.content or throws MalformedResponse.
  static std::string response_content(const std::string& body);

 private:
  std::string scheme_host_port_;
  std::string path_;
  std::string api_key_;
};

struct TapeEntry {
  std::string mode;
  std::string user_text;
  std::string response_text;
};

// Recorded responses keyed by (mode, final user text). Lookups are
// read-concurrent; recording is exclusive and appends to the backing file.
class ReplayTape {
 public:
  ReplayTape() = default;
  static std::shared_ptr<ReplayTape> load(const std::filesystem::path& path, bool create_if_missing = false);

  std::optional<std::string> lookup(const std::string& mode, const std::string& user_text) const;
  void record(const std::string& mode, const std::string& user_text, const std::string& response_text);

  size_t size() const;
  // Number of lookups served so far, hits and misses.
  size_t lookups() const { return lookups_.load(); }
  size_t lookups_for(const std::string& mode, const std::string& user_text) const;

  static std::string to_jsonl(const std::vector<TapeEntry>& entries);

 private:
  using Key = std::pair<std::string, std::string>;
  mutable std::shared_mutex mu_;
  std::map<Key, std::string> entries_;
  mutable std::mutex count_mu_;
  mutable std::map<Key, size_t> access_;
  mutable std::atomic<size_t> lookups_{0};
  std::filesystem::path path_;
};

enum class TapeMode {
  kStrict,  // miss -> TapeMiss
  kRecord,  // miss -> live backend, response appended to the tape
};

class ReplayBackend : public Backend {
 public:
  ReplayBackend(std::shared_ptr<ReplayTape> tape, TapeMode mode = TapeMode::kStrict,
                std::shared_ptr<Backend> live = nullptr);

  Completion complete(const PromptBundle& bundle, const GenerationParams& params) override;

  const ReplayTape& tape() const { return *tape_; }

 private:
  std::shared_ptr<ReplayTape> tape_;
  TapeMode mode_;
  std::shared_ptr<Backend> live_;
};

// Strict replay lookup.
Completion mock_complete(const PromptBundle& bundle, const ReplayTape& tape);

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{1000};  // doubles per retry: 1s, 2s, 4s
};

struct BatchResult {
  std::optional<Completion> completion;
  std::optional<Error> error;
  int attempts = 0;

  bool ok() const { return completion.has_value(); }
};

// Runs every bundle with at most `max_in_flight` outstanding requests.
// Results are in input order; a failed item never aborts the batch.
std::vector<BatchResult> complete_batch(Backend& backend, const std::vector<PromptBundle>& bundles,
                                        const GenerationParams& params, int max_in_flight,
                                        const RetryPolicy& retry = RetryPolicy());

}  // namespace p2t
