#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "promptopt/dataset.hpp"
#include "promptopt/lm.hpp"

namespace promptopt {

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
};

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingVector embed(const std::string& text) = 0;
  virtual std::size_t dim() const = 0;
};

// Deterministic hashed character-trigram frequency embedder, L2-normalized.
class LocalEmbedder : public Embedder {
 public:
  explicit LocalEmbedder(std::size_t dim = 256) : dim_(dim) {}

  EmbeddingVector embed(const std::string& text) override;
  std::size_t dim() const override { return dim_; }

 private:
  std::size_t dim_;
};

struct RemoteEmbedderConfig {
  std::string base_url;
  std::string path = "/v1/embeddings";
  std::string api_key_env;
  std::string model_id;
  std::size_t dim = 0;  // declared dimension; checked against responses
  int max_retries = 2;
  int backoff_base_ms = 1000;
  int timeout_s = 120;
};

// POSTs {model, input:[text]} and reads data[0].embedding, with the same
// retry policy as the completion client.
class RemoteEmbedder : public Embedder {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig config) : config_(std::move(config)) {}

  EmbeddingVector embed(const std::string& text) override;
  std::size_t dim() const override { return config_.dim; }

 private:
  RemoteEmbedderConfig config_;
};

// What the judge sees is what gets embedded: context + answer.
std::string embedding_text_for(const Record& record);

// Exact k-nearest-neighbor index under cosine similarity. Immutable after
// build; queries are read-only.
class ExampleIndex {
 public:
  ExampleIndex() = default;

  void add(const std::string& id, EmbeddingVector vector);

  // Ids of the k most similar entries, descending similarity, ties broken by
  // insertion order. Exact: identical to a brute-force full sort.
  std::vector<std::string> knn_query(const EmbeddingVector& query, std::size_t k) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& ids() const { return ids_; }

  void save(const std::filesystem::path& path) const;
  static ExampleIndex load(const std::filesystem::path& path);

  static ExampleIndex build(const std::vector<Record>& records, Embedder& embedder);

 private:
  std::vector<std::string> ids_;
  std::vector<EmbeddingVector> entries_;
  std::size_t dim_ = 0;
};

}  // namespace promptopt
