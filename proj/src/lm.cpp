#include "promptopt/lm.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <regex>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "promptopt/error.hpp"
#include "promptopt/ir.hpp"
#include "promptopt/util.hpp"

namespace promptopt {

using nlohmann::json;

namespace {

std::string canonical_request(const std::string& prompt, const LMParams& params) {
  json j{{"model", params.model_id},
         {"prompt", prompt},
         {"temperature", params.temperature},
         {"top_p", params.top_p}};
  j["max_tokens"] = params.max_tokens ? json(*params.max_tokens) : json(nullptr);
  return j.dump();
}

}  // namespace

CacheKey CacheKey::compute(const std::string& prompt, const LMParams& params) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_request(prompt, params))));
  return CacheKey{buf};
}

CompletionCache::CompletionCache(std::filesystem::path path) : path_(std::move(path)) {
  load();
}

void CompletionCache::load() {
  std::ifstream in(path_);
  if (!in) return;  // a fresh cache has no file yet
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json entry = json::parse(line, nullptr, false);
    if (entry.is_discarded() || !entry.contains("digest")) continue;
    entries_[entry["digest"].get<std::string>()] = {entry.value("request", ""),
                                                    entry.value("completion", "")};
  }
}

std::optional<std::string> CompletionCache::get(const std::string& prompt,
                                                const LMParams& params) {
  const std::string request = canonical_request(prompt, params);
  const CacheKey key = CacheKey::compute(prompt, params);
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = entries_.find(key.digest);
  if (it != entries_.end() && it->second.first == request) {
    hits_.fetch_add(1);
    return it->second.second;
  }
  misses_.fetch_add(1);
  return std::nullopt;
}

void CompletionCache::put(const std::string& prompt, const LMParams& params,
                          const std::string& completion) {
  const std::string request = canonical_request(prompt, params);
  const CacheKey key = CacheKey::compute(prompt, params);
  json entry{{"digest", key.digest}, {"request", request}, {"completion", completion}};
  std::lock_guard<std::mutex> lock(mutex_);
  entries_[key.digest] = {request, completion};
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app);
  if (!out) throw Error::io("cannot append to cache file: " + path_.string());
  out << entry.dump() << "\n";
}

std::size_t CompletionCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.size();
}

// ---------------------------------------------------------------------------
// HTTP backend

HttpLM::HttpLM(HttpLMConfig config, std::filesystem::path cache_path)
    : config_(std::move(config)), cache_(std::move(cache_path)) {}

std::string HttpLM::complete(const std::string& prompt, const LMParams& params) {
  calls_.fetch_add(1);
  if (auto cached = cache_.get(prompt, params)) return *cached;
  std::string completion = request_completion(prompt, params);
  cache_.put(prompt, params, completion);
  return completion;
}

std::string HttpLM::request_completion(const std::string& prompt, const LMParams& params) {
  json body{{"model", params.model_id},
            {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
            {"temperature", params.temperature},
            {"top_p", params.top_p}};
  if (params.max_tokens) body["max_tokens"] = *params.max_tokens;
  const std::string payload = body.dump();

  std::string api_key;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key = key;
  }

  std::string last_failure;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(static_cast<long long>(config_.backoff_base_ms) << (attempt - 1)));
    }
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_s, 0);
    client.set_read_timeout(config_.timeout_s, 0);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

    requests_.fetch_add(1);
    auto res = client.Post(config_.path, headers, payload, "application/json");
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;  // retryable
    }
    if (res->status >= 200 && res->status < 300) {
      json parsed = json::parse(res->body, nullptr, false);
      if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty())
        throw Error::backend("malformed completion response: " + res->body);
      return parsed["choices"][0]["message"]["content"].get<std::string>();
    }
    if (res->status == 429 || res->status == 408 || res->status >= 500) {
      last_failure = "status " + std::to_string(res->status) + ": " + res->body;
      continue;  // retryable
    }
    throw Error::backend("completion request failed with status " + std::to_string(res->status) +
                         ": " + res->body);
  }
  throw Error::backend("completion request failed after " +
                       std::to_string(1 + config_.max_retries) + " attempts; last: " +
                       last_failure);
}

// ---------------------------------------------------------------------------
// Scriptable mock

MockLM::MockLM(std::string default_response) : default_response_(std::move(default_response)) {}

void MockLM::add_rule(MockRule rule) {
  rules_.push_back(std::move(rule));
  std::stable_sort(rules_.begin(), rules_.end(),
                   [](const MockRule& a, const MockRule& b) { return a.priority > b.priority; });
}

void MockLM::load_rules_file(const std::filesystem::path& path) {
  json doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.is_array())
    throw Error::parse("mock rules file must be a JSON array: " + path.string());
  for (const auto& item : doc) {
    MockRule rule;
    rule.matcher = item.value("matcher", "");
    rule.response = item.value("response", "");
    rule.priority = item.value("priority", 0);
    rule.is_regex = item.value("regex", item.value("is_regex", false));
    add_rule(std::move(rule));
  }
}

std::string MockLM::complete(const std::string& prompt, const LMParams&) {
  calls_.fetch_add(1);
  for (const auto& rule : rules_) {
    if (rule.is_regex) {
      if (std::regex_search(prompt, std::regex(rule.matcher))) return rule.response;
    } else if (prompt.find(rule.matcher) != std::string::npos) {
      return rule.response;
    }
  }
  return default_response_;
}

// ---------------------------------------------------------------------------
// Synthetic judge

SyntheticJudgeLM::SyntheticJudgeLM(SyntheticJudgeConfig config) : config_(config) {}

bool SyntheticJudgeLM::faithful(const std::string& document, const std::string& answer) {
  const auto doc_tokens = alnum_tokens(document);
  const std::set<std::string> vocabulary(doc_tokens.begin(), doc_tokens.end());
  for (const auto& token : alnum_tokens(answer)) {
    if (token.size() < 3) continue;  // short tokens carry no content
    if (!vocabulary.count(token)) return false;
  }
  return true;
}

namespace {

// First missing content token, for the FAIL reason line.
std::string first_missing_token(const std::string& document, const std::string& answer) {
  const auto doc_tokens = alnum_tokens(document);
  const std::set<std::string> vocabulary(doc_tokens.begin(), doc_tokens.end());
  for (const auto& token : alnum_tokens(answer)) {
    if (token.size() < 3) continue;
    if (!vocabulary.count(token)) return token;
  }
  return "";
}

int count_demo_blocks(const std::string& prompt) {
  const Signature sig = faithfulness_signature();
  int count = 0;
  for (const auto& object_text : extract_json_objects(prompt)) {
    if (parse_prediction(object_text, sig).parse_status == ParseStatus::ok) ++count;
  }
  return count;
}

struct JudgeQuery {
  std::string document;
  std::string answer;
  bool found = false;
};

// The query is the last DOCUMENT/ANSWER block pair before the format
// directive; demo blocks precede it.
JudgeQuery locate_query(const std::string& prompt) {
  JudgeQuery q;
  const std::string doc_header = "DOCUMENT:\n";
  const std::string ans_header = "\n\nANSWER:\n";
  const std::string directive = "Your output should be in JSON format";

  const std::size_t directive_pos = prompt.rfind(directive);
  if (directive_pos == std::string::npos) return q;
  const std::size_t ans_pos = prompt.rfind(ans_header, directive_pos);
  if (ans_pos == std::string::npos) return q;
  std::size_t doc_pos = prompt.rfind(doc_header, ans_pos);
  if (doc_pos == std::string::npos) return q;

  std::size_t doc_end = ans_pos;
  const std::size_t question_pos = prompt.find("\n\nQUESTION:\n", doc_pos);
  if (question_pos != std::string::npos && question_pos < ans_pos) doc_end = question_pos;

  const std::size_t doc_start = doc_pos + doc_header.size();
  const std::size_t ans_start = ans_pos + ans_header.size();
  if (doc_end < doc_start || directive_pos < ans_start + 2) return q;
  q.document = prompt.substr(doc_start, doc_end - doc_start);
  q.answer = prompt.substr(ans_start, directive_pos - ans_start - 2);  // strip "\n\n"
  q.found = true;
  return q;
}

const char* kProseResponses[] = {
    "I cannot determine whether this answer is faithful without more context.",
    "The answer appears plausible, though the document is somewhat ambiguous on this point.",
    "Let me think about this. The document discusses related material but a verdict is hard to give.",
    "Faithfulness assessment: the response may or may not be fully grounded in the source text.",
};

}  // namespace

std::string SyntheticJudgeLM::complete(const std::string& prompt, const LMParams&) {
  calls_.fetch_add(1);

  const JudgeQuery query = locate_query(prompt);
  nlohmann::ordered_json verdict;
  if (!query.found) {
    // Not a judge prompt (e.g. an instruction-proposal request): answer
    // deterministically so optimizers that reuse this backend still run.
    verdict["REASONING"] = {"no DOCUMENT/ANSWER query found in the prompt"};
    verdict["SCORE"] = "FAIL";
    return verdict.dump();
  }

  const bool is_faithful = faithful(query.document, query.answer);
  if (is_faithful) {
    verdict["REASONING"] = {"every content token of the ANSWER appears in the DOCUMENT"};
    verdict["SCORE"] = "PASS";
  } else {
    verdict["REASONING"] = {"the token '" + first_missing_token(query.document, query.answer) +
                            "' does not appear in the DOCUMENT"};
    verdict["SCORE"] = "FAIL";
  }

  if (count_demo_blocks(prompt) >= config_.min_demos) return verdict.dump();

  // Degraded zero/few-shot regime: a seeded per-prompt coin decides between
  // the well-formed verdict and malformed prose.
  const std::uint64_t h = derive_seed(config_.seed, prompt);
  if (unit_real(h) < config_.p_base) return verdict.dump();
  const std::size_t n_prose = sizeof(kProseResponses) / sizeof(kProseResponses[0]);
  return kProseResponses[derive_seed(h, "prose") % n_prose];
}

}  // namespace promptopt
