#include "promptopt/embed.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "promptopt/error.hpp"
#include "promptopt/util.hpp"

namespace promptopt {

using nlohmann::json;

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) throw Error::invalid_argument("embedding dimension mismatch");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

EmbeddingVector LocalEmbedder::embed(const std::string& text) {
  EmbeddingVector v;
  v.values.assign(dim_, 0.0);
  const std::string lowered = to_lower(text);
  // Character trigrams over the lowered text, hashed into dim_ buckets.
  if (lowered.size() >= 3) {
    for (std::size_t i = 0; i + 3 <= lowered.size(); ++i) {
      const std::uint64_t h = fnv1a64(std::string_view(lowered).substr(i, 3));
      v.values[h % dim_] += 1.0;
    }
  } else if (!lowered.empty()) {
    v.values[fnv1a64(lowered) % dim_] += 1.0;
  }
  const double norm = std::sqrt(
      std::inner_product(v.values.begin(), v.values.end(), v.values.begin(), 0.0));
  if (norm > 0.0) {
    for (double& x : v.values) x /= norm;
  }
  return v;
}

EmbeddingVector RemoteEmbedder::embed(const std::string& text) {
  json body{{"model", config_.model_id}, {"input", json::array({text})}};
  const std::string payload = body.dump();

  std::string api_key;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key = key;
  }

  std::string last_failure;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(
          static_cast<long long>(config_.backoff_base_ms) << (attempt - 1)));
    }
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_s, 0);
    client.set_read_timeout(config_.timeout_s, 0);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

    auto res = client.Post(config_.path, headers, payload, "application/json");
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      json parsed = json::parse(res->body, nullptr, false);
      if (parsed.is_discarded() || !parsed.contains("data") || parsed["data"].empty())
        throw Error::backend("malformed embedding response: " + res->body);
      EmbeddingVector v;
      for (const auto& x : parsed["data"][0]["embedding"]) v.values.push_back(x.get<double>());
      if (config_.dim != 0 && v.dim() != config_.dim)
        throw Error::backend("embedding dimension " + std::to_string(v.dim()) +
                             " does not match configured " + std::to_string(config_.dim));
      return v;
    }
    if (res->status == 429 || res->status == 408 || res->status >= 500) {
      last_failure = "status " + std::to_string(res->status) + ": " + res->body;
      continue;
    }
    throw Error::backend("embedding request failed with status " + std::to_string(res->status) +
                         ": " + res->body);
  }
  throw Error::backend("embedding request failed after " +
                       std::to_string(1 + config_.max_retries) + " attempts; last: " +
                       last_failure);
}

std::string embedding_text_for(const Record& record) {
  return record.context + "\n\n" + record.answer;
}

void ExampleIndex::add(const std::string& id, EmbeddingVector vector) {
  for (double x : vector.values) {
    if (!std::isfinite(x)) throw Error::invalid_argument("non-finite embedding entry");
  }
  if (entries_.empty()) {
    dim_ = vector.dim();
  } else if (vector.dim() != dim_) {
    throw Error::invalid_argument("index dimension mismatch: expected " + std::to_string(dim_) +
                                  ", got " + std::to_string(vector.dim()));
  }
  for (const auto& existing : ids_) {
    if (existing == id) throw Error::invalid_argument("duplicate index id: " + id);
  }
  ids_.push_back(id);
  entries_.push_back(std::move(vector));
}

std::vector<std::string> ExampleIndex::knn_query(const EmbeddingVector& query,
                                                 std::size_t k) const {
  if (k == 0 || k > entries_.size())
    throw Error::invalid_argument("k must be in [1, " + std::to_string(entries_.size()) + "]");
  if (query.dim() != dim_) throw Error::invalid_argument("query dimension mismatch");

  std::vector<std::size_t> order(entries_.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> sims(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i)
    sims[i] = cosine_similarity(query, entries_[i]);
  // Stable sort keeps insertion order on ties.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });

  std::vector<std::string> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(ids_[order[i]]);
  return out;
}

void ExampleIndex::save(const std::filesystem::path& path) const {
  json entries = json::array();
  for (std::size_t i = 0; i < ids_.size(); ++i)
    entries.push_back({{"id", ids_[i]}, {"values", entries_[i].values}});
  json doc{{"version", 1}, {"dim", dim_}, {"entries", entries}};
  write_file_atomic(path, doc.dump() + "\n");
}

ExampleIndex ExampleIndex::load(const std::filesystem::path& path) {
  json doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded()) throw Error::parse("malformed index file: " + path.string());
  if (doc.value("version", 0) != 1)
    throw Error::parse("unsupported index version in " + path.string());
  ExampleIndex index;
  for (const auto& entry : doc["entries"]) {
    EmbeddingVector v;
    for (const auto& x : entry["values"]) v.values.push_back(x.get<double>());
    index.add(entry["id"].get<std::string>(), std::move(v));
  }
  return index;
}

ExampleIndex ExampleIndex::build(const std::vector<Record>& records, Embedder& embedder) {
  ExampleIndex index;
  for (const auto& record : records) index.add(record.id, embedder.embed(embedding_text_for(record)));
  return index;
}

}  // namespace promptopt
