#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "globalrag/http.hpp"

namespace globalrag {

using Embedding = std::vector<double>;

/// Embedding provider. Implementations must tolerate concurrent embed() calls.
class Embedder {
public:
  virtual ~Embedder() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual std::size_t dim() const = 0;
  /// One vector per input text, in input order.
  virtual std::vector<Embedding> embed(std::span<const std::string> texts) = 0;

  Embedding embed_one(const std::string& text);
};

/// Lowercased alphanumeric tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Offline embedder: seeded signed feature hashing of unigrams and bigrams into
/// a fixed-dimension vector, L2-normalized. Texts with no tokens map to the
/// zero vector.
class HashingEmbedder final : public Embedder {
public:
  explicit HashingEmbedder(std::size_t dim = 256, std::uint64_t seed = 0);

  [[nodiscard]] std::string name() const override;
  [[nodiscard]] std::size_t dim() const override { return dim_; }
  std::vector<Embedding> embed(std::span<const std::string> texts) override;

private:
  [[nodiscard]] Embedding embed_text(std::string_view text) const;

  std::size_t dim_;
  std::uint64_t seed_;
};

struct RemoteEmbedderConfig {
  std::string url;  // full endpoint, e.g. http://host:8080/v1/embeddings
  std::string model;
  std::string api_key;  // sent as a bearer token when non-empty
  std::size_t dim = 0;
  std::size_t batch_size = 32;
  RetryPolicy retry;
};

/// OpenAI-compatible embeddings endpoint: POST {"input": [...], "model": m},
/// response {"data": [{"index": i, "embedding": [...]}, ...]}.
class RemoteEmbedder final : public Embedder {
public:
  RemoteEmbedder(RemoteEmbedderConfig config, HttpTransport& transport);

  [[nodiscard]] std::string name() const override { return "remote:" + config_.model; }
  [[nodiscard]] std::size_t dim() const override { return config_.dim; }
  std::vector<Embedding> embed(std::span<const std::string> texts) override;

private:
  std::vector<Embedding> embed_batch(std::span<const std::string> texts);

  RemoteEmbedderConfig config_;
  HttpTransport& transport_;
};

}  // namespace globalrag
