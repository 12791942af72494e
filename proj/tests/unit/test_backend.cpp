#include <doctest.h>

#include <cstdlib>
#include <random>

#include "p2t/backend.hpp"
#include "support/stub_server.hpp"
#include "support/test_support.hpp"

using namespace p2t;
using p2t::testing::StubReply;
using p2t::testing::StubServer;

namespace {

PromptBundle bundle_for(const std::string& text, PromptMode mode = PromptMode::kZeroShot) {
  PromptBundle b;
  b.mode = mode;
  b.messages = {{Role::kSystem, "sys"}, {Role::kUser, text}};
  return b;
}

RetryPolicy fast_retry(int retries = 3) { return RetryPolicy{retries, std::chrono::milliseconds(1)}; }

StubReply echo(const nlohmann::json& req) { return {200, StubServer::content_body("echo:" + StubServer::last_user(req))}; }

}  // namespace

TEST_CASE("HttpBackend sends the chat-completions wire format") {
  StubServer server([](const nlohmann::json&) {
    return StubReply{200, R"x({"choices":[{"message":{"content":"('I', 'was born', '1979', 'birthday')"}}]})x"};
  });
  HttpBackend backend(server.url(), "secret");
  GenerationParams params;
  params.model = "mistral-7b-instruct-v0.2";
  params.max_tokens = 64;
  auto c = backend.complete(bundle_for("I was born in 1979"), params);
  CHECK(c.text == "('I', 'was born', '1979', 'birthday')");
  CHECK_FALSE(c.request_id.empty());

  auto body = nlohmann::json::parse(server.bodies().at(0));
  CHECK(body["model"] == "mistral-7b-instruct-v0.2");
  CHECK(body["temperature"] == 0.0);
  CHECK(body["max_tokens"] == 64);
  CHECK_FALSE(body.contains("seed"));
  REQUIRE(body["messages"].size() == 2);
  CHECK(body["messages"][0] == nlohmann::json{{"role", "system"}, {"content", "sys"}});
  CHECK(body["messages"][1] == nlohmann::json{{"role", "user"}, {"content", "I was born in 1979"}});
  CHECK(server.auth_headers().at(0) == "Bearer secret");
}

TEST_CASE("HttpBackend reads the credential from P2T_API_KEY") {
  StubServer server(echo);
  ::setenv("P2T_API_KEY", "from-env", 1);
  HttpBackend with_env(server.url());
  ::unsetenv("P2T_API_KEY");
  HttpBackend without(server.url() + "/");
  with_env.complete(bundle_for("a"), {});
  without.complete(bundle_for("b"), {});
  auto auth = server.auth_headers();
  CHECK(auth.at(0) == "Bearer from-env");
  CHECK(auth.at(1).empty());
}

TEST_CASE("HttpBackend error mapping") {
  StubServer server([](const nlohmann::json& req) {
    std::string u = StubServer::last_user(req);
    if (u == "500") return StubReply{500, "internal failure"};
    if (u == "429") return StubReply{429, "slow down"};
    if (u == "nochoices") return StubReply{200, R"({"choices":[]})"};
    if (u == "nocontent") return StubReply{200, R"({"choices":[{"message":{}}]})"};
    return StubReply{200, "not json"};
  });
  HttpBackend backend(server.url());
  auto code_of = [&](const std::string& text) {
    try {
      backend.complete(bundle_for(text), {});
    } catch (const Error& e) {
      return std::make_pair(e.code(), e.http_status);
    }
    return std::make_pair(Errc::kInvalidArgument, -1);
  };
  CHECK(code_of("500") == std::make_pair(Errc::kHttpStatus, 500));
  CHECK(code_of("429") == std::make_pair(Errc::kRateLimited, 429));
  CHECK(code_of("nochoices").first == Errc::kMalformedResponse);
  CHECK(code_of("nocontent").first == Errc::kMalformedResponse);
  CHECK(code_of("garbage").first == Errc::kMalformedResponse);

  try {
    backend.complete(bundle_for("500"), {});
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("internal failure") != std::string::npos);
    CHECK_FALSE(e.transient());
  }
}

TEST_CASE("HttpBackend reports refused connections as Network") {
  int port;
  {
    httplib::Server s;
    port = s.bind_to_any_port("127.0.0.1");
  }
  HttpBackend backend("http://127.0.0.1:" + std::to_string(port));
  GenerationParams params;
  params.timeout = std::chrono::milliseconds(500);
  try {
    backend.complete(bundle_for("x"), params);
    FAIL("expected Network");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kNetwork);
    CHECK(e.transient());
  }
}

TEST_CASE("GenerationParams validation") {
  GenerationParams p;
  p.temperature = -0.1;
  CHECK_THROWS_AS(p.validate(), Error);
  p.temperature = 0.7;
  p.max_tokens = 0;
  CHECK_THROWS_AS(p.validate(), Error);
  p.max_tokens = 1;
  p.seed = 7;
  CHECK_NOTHROW(p.validate());
  PromptBundle b = bundle_for("x");
  CHECK(nlohmann::json::parse(HttpBackend::request_body(b, p))["seed"] == 7);
}

TEST_CASE("request ids are unique") {
  std::set<std::string> ids;
  for (int i = 0; i < 1000; ++i) CHECK(ids.insert(next_request_id()).second);
}

TEST_CASE("complete_batch with max_in_flight=1 is sequential") {
  StubServer server(echo, 20);
  HttpBackend backend(server.url());
  std::vector<PromptBundle> bundles = {bundle_for("a"), bundle_for("b"), bundle_for("c")};
  auto results = complete_batch(backend, bundles, {}, 1, fast_retry());
  REQUIRE(results.size() == 3);
  CHECK(server.max_in_flight() == 1);
  auto bodies = server.bodies();
  CHECK(StubServer::last_user(nlohmann::json::parse(bodies[0])) == "a");
  CHECK(StubServer::last_user(nlohmann::json::parse(bodies[1])) == "b");
  CHECK(StubServer::last_user(nlohmann::json::parse(bodies[2])) == "c");
}

TEST_CASE("complete_batch keeps order, bounds concurrency and isolates failures") {
  StubServer server(
      [](const nlohmann::json& req) {
        std::string u = StubServer::last_user(req);
        if (u == "item-3") return StubReply{500, "permanent"};
        return StubReply{200, StubServer::content_body("out:" + u)};
      },
      25);
  HttpBackend backend(server.url());
  std::vector<PromptBundle> bundles;
  for (int i = 0; i < 10; ++i) bundles.push_back(bundle_for("item-" + std::to_string(i)));

  auto sequential = complete_batch(backend, bundles, {}, 1, fast_retry());
  auto parallel = complete_batch(backend, bundles, {}, 4, fast_retry());
  CHECK(server.max_in_flight() <= 4);
  CHECK(server.max_in_flight() >= 2);

  for (const auto* run : {&sequential, &parallel}) {
    REQUIRE(run->size() == 10);
    size_t ok = 0;
    for (size_t i = 0; i < 10; ++i) {
      if (i == 3) {
        REQUIRE_FALSE((*run)[i].ok());
        CHECK((*run)[i].error->code() == Errc::kHttpStatus);
        CHECK((*run)[i].attempts == 1);
      } else {
        REQUIRE((*run)[i].ok());
        CHECK((*run)[i].completion->text == "out:item-" + std::to_string(i));
        ++ok;
      }
    }
    CHECK(ok == 9);
  }
  for (size_t i = 0; i < 10; ++i) {
    CHECK(sequential[i].ok() == parallel[i].ok());
    if (sequential[i].ok()) CHECK(sequential[i].completion->text == parallel[i].completion->text);
  }
}

TEST_CASE("complete_batch retries transient failures with backoff") {
  std::atomic<int> calls{0};
  StubServer server([&](const nlohmann::json& req) {
    std::string u = StubServer::last_user(req);
    int n = ++calls;
    if (u == "flaky" && n <= 2) return StubReply{429, "later"};
    if (u == "always429") return StubReply{429, "later"};
    return StubReply{200, StubServer::content_body("ok")};
  });
  HttpBackend backend(server.url());

  auto flaky = complete_batch(backend, {bundle_for("flaky")}, {}, 1, fast_retry());
  REQUIRE(flaky[0].ok());
  CHECK(flaky[0].attempts == 3);

  calls = 0;
  auto capped = complete_batch(backend, {bundle_for("always429")}, {}, 1, fast_retry(3));
  REQUIRE_FALSE(capped[0].ok());
  CHECK(capped[0].error->code() == Errc::kRateLimited);
  CHECK(capped[0].attempts == 4);
  CHECK(calls == 4);

  CHECK(RetryPolicy().max_retries == 3);
  CHECK(RetryPolicy().initial_backoff == std::chrono::milliseconds(1000));
  CHECK_THROWS_AS(complete_batch(backend, {}, {}, 0), Error);
}

TEST_CASE("mock_complete looks up (mode, final user text)") {
  ReplayTape tape;
  tape.record("zero_shot", "I was born in 1979", "('I', 'was born', '1979', 'birthday')");
  auto c = mock_complete(bundle_for("I was born in 1979"), tape);
  CHECK(c.text == "('I', 'was born', '1979', 'birthday')");
  try {
    mock_complete(bundle_for("I was born in 1979", PromptMode::kFewShot), tape);
    FAIL("expected TapeMiss");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kTapeMiss);
  }
  CHECK(tape.lookups() == 2);
  CHECK(tape.lookups_for("zero_shot", "I was born in 1979") == 1);
}

TEST_CASE("record then replay round trip") {
  p2t::testing::TempDir tmp;
  StubServer server(echo);
  auto live = std::make_shared<HttpBackend>(server.url());
  std::mt19937_64 rng(51);
  std::vector<PromptBundle> bundles;
  for (int i = 0; i < 40; ++i) {
    auto mode = static_cast<PromptMode>(rng() % 3);
    bundles.push_back(bundle_for(p2t::testing::random_printable(rng, 1, 40) + "\n\"quoted\"", mode));
  }

  std::vector<std::string> recorded;
  {
    auto tape = ReplayTape::load(tmp / "tape.jsonl", true);
    ReplayBackend recorder(tape, TapeMode::kRecord, live);
    for (const auto& b : bundles) recorded.push_back(recorder.complete(b, {}).text);
    // Second pass is served from memory without contacting the server.
    size_t before = server.bodies().size();
    for (size_t i = 0; i < bundles.size(); ++i) CHECK(recorder.complete(bundles[i], {}).text == recorded[i]);
    CHECK(server.bodies().size() == before);
  }

  auto reloaded = ReplayTape::load(tmp / "tape.jsonl");
  ReplayBackend replay(reloaded);
  for (size_t i = 0; i < bundles.size(); ++i) CHECK(replay.complete(bundles[i], {}).text == recorded[i]);
  CHECK_THROWS_AS(replay.complete(bundle_for("never recorded"), {}), Error);
}

TEST_CASE("replay is read-concurrent under complete_batch") {
  auto tape = std::make_shared<ReplayTape>();
  std::vector<PromptBundle> bundles;
  for (int i = 0; i < 200; ++i) {
    tape->record("zero_shot", "p" + std::to_string(i), "r" + std::to_string(i));
    bundles.push_back(bundle_for("p" + std::to_string(i)));
  }
  ReplayBackend backend(tape);
  auto results = complete_batch(backend, bundles, {}, 8);
  for (size_t i = 0; i < results.size(); ++i) CHECK(results[i].completion->text == "r" + std::to_string(i));
  CHECK(tape->lookups() == 200);
}

TEST_CASE("batching never mutates bundles") {
  auto tape = std::make_shared<ReplayTape>();
  tape->record("zero_shot", "p", "r");
  ReplayBackend backend(tape);
  std::vector<PromptBundle> bundles = {bundle_for("p"), bundle_for("q")};
  auto copy = bundles;
  complete_batch(backend, bundles, {}, 2);
  CHECK(bundles == copy);
}
