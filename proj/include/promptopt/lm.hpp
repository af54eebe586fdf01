#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace promptopt {

struct LMParams {
  std::string model_id;
  double temperature = 0.0;
  double top_p = 1.0;
  std::optional<int> max_tokens;
};

// Fixed-width digest over (model_id, prompt, temperature, top_p, max_tokens).
struct CacheKey {
  std::string digest;  // 16 hex chars

  static CacheKey compute(const std::string& prompt, const LMParams& params);
};

// Append-only JSONL completion store. Entries carry the full request so a
// digest collision can never surface a wrong completion.
class CompletionCache {
 public:
  explicit CompletionCache(std::filesystem::path path);

  std::optional<std::string> get(const std::string& prompt, const LMParams& params);
  void put(const std::string& prompt, const LMParams& params, const std::string& completion);

  std::size_t size() const;
  std::uint64_t hits() const { return hits_.load(); }
  std::uint64_t misses() const { return misses_.load(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  void load();

  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::map<std::string, std::pair<std::string, std::string>> entries_;  // digest -> (request, completion)
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
};

// A language-model backend. complete() is safe to call concurrently.
class LM {
 public:
  virtual ~LM() = default;

  virtual std::string complete(const std::string& prompt, const LMParams& params) = 0;

  // complete() invocations, the budget-accounting unit for optimizers.
  std::uint64_t call_count() const { return calls_.load(); }

 protected:
  std::atomic<std::uint64_t> calls_{0};
};

struct HttpLMConfig {
  std::string base_url = "http://127.0.0.1:8080";
  std::string path = "/v1/chat/completions";
  std::string api_key_env;  // env var NAME; the key never lives in config
  int max_retries = 2;      // attempts <= 1 + max_retries
  int backoff_base_ms = 1000;
  int timeout_s = 120;
};

// Chat-completion client with persistent response caching and exponential
// backoff on timeout/429/5xx.
class HttpLM : public LM {
 public:
  HttpLM(HttpLMConfig config, std::filesystem::path cache_path);

  std::string complete(const std::string& prompt, const LMParams& params) override;

  // Outbound HTTP requests actually performed (cache hits excluded).
  std::uint64_t request_count() const { return requests_.load(); }
  CompletionCache& cache() { return cache_; }

 private:
  std::string request_completion(const std::string& prompt, const LMParams& params);

  HttpLMConfig config_;
  CompletionCache cache_;
  std::atomic<std::uint64_t> requests_{0};
};

struct MockRule {
  std::string matcher;   // substring, or ECMAScript regex when is_regex
  std::string response;
  int priority = 0;
  bool is_regex = false;
};

// Deterministic scriptable backend: highest priority wins, then declaration
// order; unmatched prompts get the default response.
class MockLM : public LM {
 public:
  explicit MockLM(std::string default_response = "");

  void add_rule(MockRule rule);
  void load_rules_file(const std::filesystem::path& path);  // JSON array of MockRule

  std::string complete(const std::string& prompt, const LMParams& params) override;

 private:
  std::string default_response_;
  std::vector<MockRule> rules_;  // kept sorted: priority desc, declaration order
};

struct SyntheticJudgeConfig {
  std::uint64_t seed = 0;
  int min_demos = 1;     // demo blocks needed for guaranteed well-formed output
  double p_base = 0.6;   // chance of a well-formed verdict below that threshold
};

// Desk-scale oracle: answers faithfulness queries with a hidden deterministic
// rule (every content token of ANSWER must occur in DOCUMENT). Prompts that
// carry fewer than min_demos well-formed demo blocks only get a valid verdict
// with probability p_base (seeded per prompt); otherwise malformed prose.
// This is what makes optimizers measurably improve accuracy offline.
class SyntheticJudgeLM : public LM {
 public:
  explicit SyntheticJudgeLM(SyntheticJudgeConfig config);

  std::string complete(const std::string& prompt, const LMParams& params) override;

  // The hidden rule, exposed so tests and the corpus generator agree with it.
  static bool faithful(const std::string& document, const std::string& answer);

 private:
  SyntheticJudgeConfig config_;
};

}  // namespace promptopt
