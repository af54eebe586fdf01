#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "promptopt/error.hpp"
#include "promptopt/ir.hpp"
#include "promptopt/lm.hpp"
#include "promptopt/util.hpp"

using namespace promptopt;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("promptopt_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Minimal chat-completion endpoint with request counting and scriptable
// status sequences.
class FakeServer {
 public:
  FakeServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      requests_.fetch_add(1);
      if (!fail_statuses_.empty()) {
        const int status = fail_statuses_.front();
        fail_statuses_.erase(fail_statuses_.begin());
        res.status = status;
        res.set_content("scripted failure", "text/plain");
        return;
      }
      last_body_ = req.body;
      const auto parsed = nlohmann::json::parse(req.body);
      const std::string prompt = parsed["messages"][0]["content"];
      nlohmann::json reply{{"choices",
                            {{{"message",
                               {{"role", "assistant"},
                                {"content", "echo:" + prompt.substr(0, 16)}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_.load(); }
  void script_failures(std::vector<int> statuses) { fail_statuses_ = std::move(statuses); }
  const std::string& last_body() const { return last_body_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  std::vector<int> fail_statuses_;
  std::string last_body_;
};

HttpLMConfig fast_config(const FakeServer& server) {
  HttpLMConfig config;
  config.base_url = server.base_url();
  config.max_retries = 2;
  config.backoff_base_ms = 1;  // keep retry tests fast
  config.timeout_s = 5;
  return config;
}

}  // namespace

TEST_CASE("cache keys separate on every parameter") {
  LMParams params{"m", 0.0, 1.0, std::nullopt};
  const CacheKey base = CacheKey::compute("prompt", params);
  CHECK(base.digest.size() == 16);
  CHECK(CacheKey::compute("prompt", params).digest == base.digest);

  LMParams hot = params;
  hot.temperature = 0.7;
  CHECK(CacheKey::compute("prompt", hot).digest != base.digest);
  LMParams capped = params;
  capped.max_tokens = 128;
  CHECK(CacheKey::compute("prompt", capped).digest != base.digest);
  CHECK(CacheKey::compute("prompt2", params).digest != base.digest);
}

TEST_CASE("completion cache round-trips and survives reopen") {
  const fs::path dir = temp_dir("cache");
  const LMParams params{"m", 0.0, 1.0, std::nullopt};
  {
    CompletionCache cache(dir / "c.jsonl");
    CHECK(!cache.get("p", params).has_value());
    cache.put("p", params, "completion text");
    auto hit = cache.get("p", params);
    REQUIRE(hit.has_value());
    CHECK(*hit == "completion text");
  }
  CompletionCache reopened(dir / "c.jsonl");
  auto hit = reopened.get("p", params);
  REQUIRE(hit.has_value());
  CHECK(*hit == "completion text");
  CHECK(reopened.size() == 1);
}

TEST_CASE("mock rules resolve by priority then declaration order") {
  MockLM lm("default");
  lm.add_rule({"alpha", "first-alpha", 0, false});
  lm.add_rule({"alpha", "second-alpha", 0, false});
  lm.add_rule({"beta", "high-beta", 5, false});
  lm.add_rule({"alpha", "priority-alpha", 9, false});

  CHECK(lm.complete("prompt with alpha inside", {}) == "priority-alpha");
  CHECK(lm.complete("prompt with beta inside", {}) == "high-beta");
  CHECK(lm.complete("nothing matches", {}) == "default");
  CHECK(lm.call_count() == 3);
}

TEST_CASE("mock regex rules match patterns across lines") {
  MockLM lm("default");
  lm.add_rule({"alpha[\\s\\S]*omega", "spanning", 0, true});
  CHECK(lm.complete("alpha\nmiddle\nomega", {}) == "spanning");
  CHECK(lm.complete("omega then alpha", {}) == "default");
}

TEST_CASE("mock rules load from a JSON file") {
  const fs::path dir = temp_dir("rules");
  write_file_atomic(dir / "rules.json",
                    R"([{"matcher": "x1", "response": "r1", "priority": 1},
                        {"matcher": "x2", "response": "r2", "priority": 9}])");
  MockLM lm("fallback");
  lm.load_rules_file(dir / "rules.json");
  CHECK(lm.complete("x1 and x2", {}) == "r2");
  CHECK(lm.complete("only x1", {}) == "r1");
}

TEST_CASE("http backend round-trips the wire format") {
  FakeServer server;
  const fs::path dir = temp_dir("http_wire");
  HttpLM lm(fast_config(server), dir / "cache.jsonl");
  LMParams params{"test-model", 0.25, 0.9, 64};

  const std::string completion = lm.complete("hello wire", params);
  CHECK(completion == "echo:hello wire");

  const auto body = nlohmann::json::parse(server.last_body());
  CHECK(body["model"] == "test-model");
  CHECK(body["temperature"] == 0.25);
  CHECK(body["top_p"] == 0.9);
  CHECK(body["max_tokens"] == 64);
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(body["messages"][0]["content"] == "hello wire");
}

TEST_CASE("repeated identical calls hit the cache with zero network requests") {
  FakeServer server;
  const fs::path dir = temp_dir("http_cache");
  HttpLM lm(fast_config(server), dir / "cache.jsonl");
  const LMParams params{"m", 0.0, 1.0, std::nullopt};

  const std::string first = lm.complete("same prompt", params);
  const int requests_after_first = server.requests();
  const std::string second = lm.complete("same prompt", params);

  CHECK(first == second);
  CHECK(server.requests() == requests_after_first);  // no extra network traffic
  CHECK(lm.cache().hits() == 1);

  // Distinct temperature produces a separate cache entry.
  LMParams hot = params;
  hot.temperature = 0.5;
  lm.complete("same prompt", hot);
  CHECK(lm.cache().size() == 2);
}

TEST_CASE("retryable statuses back off and eventually succeed") {
  FakeServer server;
  server.script_failures({500, 429});
  const fs::path dir = temp_dir("http_retry");
  HttpLM lm(fast_config(server), dir / "cache.jsonl");

  const std::string completion = lm.complete("retry me", {"m", 0.0, 1.0, std::nullopt});
  CHECK(completion == "echo:retry me");
  CHECK(server.requests() == 3);  // two failures + one success
}

TEST_CASE("retry budget is bounded by 1 + max_retries") {
  FakeServer server;
  server.script_failures({500, 500, 500, 500, 500});
  const fs::path dir = temp_dir("http_budget");
  HttpLM lm(fast_config(server), dir / "cache.jsonl");

  CHECK_THROWS_AS(lm.complete("always failing", {"m", 0.0, 1.0, std::nullopt}), Error);
  CHECK(server.requests() == 3);  // 1 + max_retries(2)
  CHECK(lm.request_count() == 3);
}

TEST_CASE("non-retryable status fails immediately with status and body") {
  FakeServer server;
  server.script_failures({403});
  const fs::path dir = temp_dir("http_fatal");
  HttpLM lm(fast_config(server), dir / "cache.jsonl");

  try {
    lm.complete("forbidden", {"m", 0.0, 1.0, std::nullopt});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::backend);
    CHECK(std::string(e.what()).find("403") != std::string::npos);
    CHECK(std::string(e.what()).find("scripted failure") != std::string::npos);
  }
  CHECK(server.requests() == 1);
}

TEST_CASE("synthetic judge emits rule-consistent verdicts when demos are present") {
  SyntheticJudgeLM lm({42, 1, 0.6});
  const Signature sig = faithfulness_signature();

  Demo demo;
  demo.inputs = {{"DOCUMENT", "alpha beta gamma delta"}, {"ANSWER", "alpha beta gamma delta"}};
  demo.outputs = {{"REASONING", "[]"}, {"SCORE", "PASS"}};

  // Faithful: every content token of the answer occurs in the document.
  const std::string faithful_prompt = render_prompt(
      sig, {demo},
      {{"DOCUMENT", "the market rose and revenue grew"}, {"ANSWER", "revenue grew"}});
  const Prediction p1 = parse_prediction(lm.complete(faithful_prompt, {}), sig);
  CHECK(p1.label == Label::pass);

  // Unfaithful: 'collapsed' never appears in the document.
  const std::string unfaithful_prompt = render_prompt(
      sig, {demo},
      {{"DOCUMENT", "the market rose and revenue grew"}, {"ANSWER", "revenue collapsed"}});
  const Prediction p2 = parse_prediction(lm.complete(unfaithful_prompt, {}), sig);
  CHECK(p2.label == Label::fail);
  CHECK(p2.raw_completion.find("collapsed") != std::string::npos);
}

TEST_CASE("synthetic judge degrades without demos and replays identically") {
  const Signature sig = faithfulness_signature();
  std::vector<std::string> first_run;
  for (int round = 0; round < 2; ++round) {
    SyntheticJudgeLM lm({7, 1, 0.6});
    std::vector<std::string> outputs;
    for (int i = 0; i < 40; ++i) {
      const std::string prompt = render_prompt(
          sig, {},
          {{"DOCUMENT", "alpha beta gamma " + std::to_string(i)}, {"ANSWER", "alpha beta"}});
      outputs.push_back(lm.complete(prompt, {}));
    }
    if (round == 0) {
      first_run = outputs;
      std::size_t invalid = 0;
      for (const auto& raw : outputs)
        if (parse_prediction(raw, sig).label == Label::invalid) ++invalid;
      CHECK(invalid > 0);   // some prose in the degraded regime
      CHECK(invalid < 40);  // but not all of it
    } else {
      CHECK(outputs == first_run);  // seeded replay
    }
  }
}

TEST_CASE("synthetic judge hidden rule ignores short tokens") {
  CHECK(SyntheticJudgeLM::faithful("the report states: margin grew", "margin grew so ?!"));
  CHECK_FALSE(SyntheticJudgeLM::faithful("the report states: margin grew", "margin shrank"));
  CHECK(SyntheticJudgeLM::faithful("any document", "a of to"));  // no content tokens
}

TEST_CASE("synthetic judge answers non-judge prompts deterministically") {
  SyntheticJudgeLM lm({1, 1, 0.6});
  const std::string a = lm.complete("Propose one improved instruction. Variation 1.", {});
  const std::string b = lm.complete("Propose one improved instruction. Variation 1.", {});
  CHECK(a == b);
  CHECK(parse_prediction(a, faithfulness_signature()).label == Label::fail);
}
