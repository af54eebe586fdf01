#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "promptopt/embed.hpp"
#include "promptopt/error.hpp"

using namespace promptopt;

namespace {

// Minimal embeddings endpoint; replies with a fixed-dimension vector derived
// from the input length.
class FakeEmbeddingServer {
 public:
  FakeEmbeddingServer() {
    server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
      requests_.fetch_add(1);
      const auto body = nlohmann::json::parse(req.body);
      const std::string input = body["input"][0];
      nlohmann::json embedding = nlohmann::json::array();
      for (int i = 0; i < 8; ++i)
        embedding.push_back(static_cast<double>((input.size() + i) % 7));
      nlohmann::json reply{{"data", {{{"embedding", embedding}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeEmbeddingServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_.load(); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
};

}  // namespace

TEST_CASE("remote embedder round-trips the wire format") {
  FakeEmbeddingServer server;
  RemoteEmbedderConfig config;
  config.base_url = server.base_url();
  config.model_id = "embedding-model";
  config.dim = 8;
  config.max_retries = 1;
  config.backoff_base_ms = 1;

  RemoteEmbedder embedder(config);
  const EmbeddingVector v = embedder.embed("hello");
  CHECK(v.dim() == 8);
  CHECK(server.requests() == 1);
}

TEST_CASE("remote embedder rejects a dimension drift") {
  FakeEmbeddingServer server;
  RemoteEmbedderConfig config;
  config.base_url = server.base_url();
  config.dim = 12;  // endpoint returns 8
  config.max_retries = 0;
  RemoteEmbedder embedder(config);
  CHECK_THROWS_AS(embedder.embed("hello"), Error);
}
