#include "p2t/backend.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "p2t/io.hpp"

namespace p2t {

void GenerationParams::validate() const {
  if (!(temperature >= 0.0)) throw Error(Errc::kInvalidArgument, "temperature must be >= 0");
  if (max_tokens < 1) throw Error(Errc::kInvalidArgument, "max_tokens must be >= 1");
}

std::string next_request_id() {
  static std::atomic<std::uint64_t> counter{0};
  return "req-" + std::to_string(++counter);
}

// ---- HTTP -----------------------------------------------------------------

HttpBackend::HttpBackend(std::string base_url, std::string api_key) : api_key_(std::move(api_key)) {
  if (api_key_.empty()) {
    if (const char* env = std::getenv("P2T_API_KEY")) api_key_ = env;
  }
  while (!base_url.empty() && base_url.back() == '/') base_url.pop_back();
  size_t scheme = base_url.find("://");
  size_t path_start = base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) {
    scheme_host_port_ = base_url;
  } else {
    scheme_host_port_ = base_url.substr(0, path_start);
    path_ = base_url.substr(path_start);
  }
  if (scheme_host_port_.empty()) throw Error(Errc::kInvalidArgument, "endpoint base URL is empty");
  path_ += "/v1/chat/completions";
}

std::string HttpBackend::request_body(const PromptBundle& bundle, const GenerationParams& params) {
  Json j;
  j["model"] = params.model;
  j["messages"] = Json::array();
  for (const auto& m : bundle.messages) {
    j["messages"].push_back({{"role", role_name(m.role)}, {"content", m.content}});
  }
  j["temperature"] = params.temperature;
  j["max_tokens"] = params.max_tokens;
  if (params.seed) j["seed"] = *params.seed;
  return j.dump();
}

std::string HttpBackend::response_content(const std::string& body) {
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::kMalformedResponse, "response is not a JSON object");
  auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty() || !(*choices)[0].is_object()) {
    throw Error(Errc::kMalformedResponse, "response has no choices");
  }
  const Json& first = (*choices)[0];
  auto msg = first.find("message");
  if (msg == first.end() || !msg->is_object()) throw Error(Errc::kMalformedResponse, "choice has no message");
  auto content = msg->find("content");
  if (content == msg->end() || !content->is_string()) {
    throw Error(Errc::kMalformedResponse, "message has no string content");
  }
  return content->get<std::string>();
}

Completion HttpBackend::complete(const PromptBundle& bundle, const GenerationParams& params) {
  params.validate();
  httplib::Client cli(scheme_host_port_);
  if (!cli.is_valid()) throw Error(Errc::kInvalidArgument, "unsupported endpoint " + scheme_host_port_);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(params.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(params.timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto start = std::chrono::steady_clock::now();
  auto res = cli.Post(path_, headers, request_body(bundle, params), "application/json");
  auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  if (!res) {
    throw Error(Errc::kNetwork, "request to " + scheme_host_port_ + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status == 429) {
    Error e(Errc::kRateLimited, "rate limited (HTTP 429)");
    e.http_status = 429;
    throw e;
  }
  if (res->status < 200 || res->status >= 300) {
    Error e(Errc::kHttpStatus, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    e.http_status = res->status;
    e.detail = res->body.substr(0, 200);
    throw e;
  }
  return Completion{response_content(res->body), latency, next_request_id()};
}

// ---- replay tape ----------------------------------------------------------

std::shared_ptr<ReplayTape> ReplayTape::load(const std::filesystem::path& path, bool create_if_missing) {
  auto tape = std::make_shared<ReplayTape>();
  tape->path_ = path;
  if (create_if_missing && !std::filesystem::exists(path)) return tape;
  for_each_jsonl(path, [&](long line, const Json& j) {
    Key key{require_string(j, "mode", line), require_string(j, "user_text", line)};
    tape->entries_[std::move(key)] = require_string(j, "response_text", line);
  });
  return tape;
}

std::optional<std::string> ReplayTape::lookup(const std::string& mode, const std::string& user_text) const {
  ++lookups_;
  {
    std::lock_guard lock(count_mu_);
    ++access_[{mode, user_text}];
  }
  std::shared_lock lock(mu_);
  auto it = entries_.find({mode, user_text});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ReplayTape::record(const std::string& mode, const std::string& user_text, const std::string& response_text) {
  std::unique_lock lock(mu_);
  entries_[{mode, user_text}] = response_text;
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw Error(Errc::kIo, "cannot append to tape " + path_.string());
  out << Json{{"mode", mode}, {"user_text", user_text}, {"response_text", response_text}}.dump() << '\n';
}

size_t ReplayTape::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

size_t ReplayTape::lookups_for(const std::string& mode, const std::string& user_text) const {
  std::lock_guard lock(count_mu_);
  auto it = access_.find({mode, user_text});
  return it == access_.end() ? 0 : it->second;
}

std::string ReplayTape::to_jsonl(const std::vector<TapeEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    out += Json{{"mode", e.mode}, {"user_text", e.user_text}, {"response_text", e.response_text}}.dump();
    out += '\n';
  }
  return out;
}

Completion mock_complete(const PromptBundle& bundle, const ReplayTape& tape) {
  const std::string mode = prompt_mode_name(bundle.mode);
  auto start = std::chrono::steady_clock::now();
  auto hit = tape.lookup(mode, bundle.final_user_text());
  if (!hit) {
    Error e(Errc::kTapeMiss, "no tape entry for (" + mode + ", " + bundle.final_user_text().substr(0, 80) + ")");
    e.detail = bundle.final_user_text();
    throw e;
  }
  auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  return Completion{*hit, latency, next_request_id()};
}

ReplayBackend::ReplayBackend(std::shared_ptr<ReplayTape> tape, TapeMode mode, std::shared_ptr<Backend> live)
    : tape_(std::move(tape)), mode_(mode), live_(std::move(live)) {
  if (!tape_) throw Error(Errc::kInvalidArgument, "replay backend needs a tape");
  if (mode_ == TapeMode::kRecord && !live_) throw Error(Errc::kInvalidArgument, "record mode needs a live backend");
}

Completion ReplayBackend::complete(const PromptBundle& bundle, const GenerationParams& params) {
  try {
    return mock_complete(bundle, *tape_);
  } catch (const Error& e) {
    if (e.code() != Errc::kTapeMiss || mode_ != TapeMode::kRecord) throw;
  }
  Completion live = live_->complete(bundle, params);
  tape_->record(prompt_mode_name(bundle.mode), bundle.final_user_text(), live.text);
  return live;
}

// ---- batching -------------------------------------------------------------

namespace {

BatchResult run_with_retry(Backend& backend, const PromptBundle& bundle, const GenerationParams& params,
                           const RetryPolicy& retry) {
  BatchResult result;
  auto backoff = retry.initial_backoff;
  while (true) {
    ++result.attempts;
    try {
      result.completion = backend.complete(bundle, params);
      result.error.reset();
      return result;
    } catch (const Error& e) {
      result.error = e;
      if (!e.transient() || result.attempts > retry.max_retries) return result;
    } catch (const std::exception& e) {
      result.error = Error(Errc::kNetwork, e.what());
      return result;
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

}  // namespace

std::vector<BatchResult> complete_batch(Backend& backend, const std::vector<PromptBundle>& bundles,
                                        const GenerationParams& params, int max_in_flight, const RetryPolicy& retry) {
  if (max_in_flight < 1) throw Error(Errc::kInvalidArgument, "max_in_flight must be >= 1");
  params.validate();
  std::vector<BatchResult> results(bundles.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < bundles.size(); i = next++) {
      results[i] = run_with_retry(backend, bundles[i], params, retry);
    }
  };
  size_t workers = std::min<size_t>(static_cast<size_t>(max_in_flight), bundles.size());
  if (workers <= 1) {
    worker();
    return results;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  pool.clear();
  return results;
}

}  // namespace p2t
