#include "globalrag/embedding.hpp"

#include <cctype>
#include <cmath>

#include <json.hpp>

#include "globalrag/errors.hpp"
#include "globalrag/hash.hpp"

namespace globalrag {

Embedding Embedder::embed_one(const std::string& text) {
  auto out = embed(std::span<const std::string>(&text, 1));
  if (out.size() != 1) throw RetrievalError("embedder returned " + std::to_string(out.size()) +
                                            " vectors for one text");
  return std::move(out.front());
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      cur.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

HashingEmbedder::HashingEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw Error("embedding dimension must be positive");
}

std::string HashingEmbedder::name() const {
  return "hashing-d" + std::to_string(dim_) + "-s" + std::to_string(seed_);
}

Embedding HashingEmbedder::embed_text(std::string_view text) const {
  Embedding v(dim_, 0.0);
  const std::uint64_t basis = fnv1a64(std::to_string(seed_));
  auto add = [&](std::string_view feature, double weight) {
    std::uint64_t h = fnv1a64(feature, basis);
    double sign = (h >> 63) != 0 ? -1.0 : 1.0;
    v[h % dim_] += sign * weight;
  };
  auto tokens = tokenize(text);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    add(tokens[i], 1.0);
    if (i + 1 < tokens.size()) add(tokens[i] + " " + tokens[i + 1], 0.5);
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

std::vector<Embedding> HashingEmbedder::embed(std::span<const std::string> texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_text(t));
  return out;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config, HttpTransport& transport)
    : config_(std::move(config)), transport_(transport) {
  if (config_.url.empty()) throw Error("remote embedder needs an endpoint URL");
  if (config_.batch_size == 0) config_.batch_size = 1;
}

std::vector<Embedding> RemoteEmbedder::embed(std::span<const std::string> texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); i += config_.batch_size) {
    auto batch = embed_batch(texts.subspan(i, std::min(config_.batch_size, texts.size() - i)));
    for (auto& e : batch) out.push_back(std::move(e));
  }
  return out;
}

std::vector<Embedding> RemoteEmbedder::embed_batch(std::span<const std::string> texts) {
  nlohmann::json req;
  req["input"] = std::vector<std::string>(texts.begin(), texts.end());
  req["model"] = config_.model;
  HttpHeaders headers;
  if (!config_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + config_.api_key);
  HttpResponse res = post_with_retry(transport_, config_.url, req.dump(), headers, config_.retry);

  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res.body);
  } catch (const nlohmann::json::parse_error&) {
    throw ProtocolError("embedding endpoint returned non-JSON body");
  }
  if (!body.contains("data") || !body["data"].is_array() || body["data"].size() != texts.size()) {
    throw ProtocolError("embedding response must carry one 'data' entry per input");
  }
  std::vector<Embedding> out(texts.size());
  std::vector<bool> seen(texts.size(), false);
  std::size_t position = 0;
  for (const auto& item : body["data"]) {
    std::size_t idx = item.contains("index") ? item["index"].get<std::size_t>() : position;
    ++position;
    if (idx >= texts.size() || seen[idx] || !item.contains("embedding") ||
        !item["embedding"].is_array()) {
      throw ProtocolError("malformed embedding entry in response");
    }
    seen[idx] = true;
    out[idx] = item["embedding"].get<Embedding>();
  }
  return out;
}

}  // namespace globalrag
