#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "globalrag/http.hpp"

namespace globalrag {

struct ChatRequest {
  std::string system_prompt;
  std::string user_prompt;
  double temperature = 0.0;
  int max_tokens = 512;
};

struct TokenUsage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  TokenUsage usage;
};

/// Stable SHA-256 over (system_prompt, user_prompt); the mock and cassette key.
std::string request_hash(const ChatRequest& request);

nlohmann::json to_json(const ChatRequest& request);
nlohmann::json to_json(const ChatResponse& response);

class ChatBackend {
public:
  virtual ~ChatBackend() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

/// Deterministic scripted backend. Lookup order: exact request hash, then the
/// longest matching user-prompt prefix, then responders in registration order.
/// Script it fully before sharing across threads; complete() only reads.
class MockChatBackend final : public ChatBackend {
public:
  /// Returns a reply, or nullopt to pass the request on.
  using Responder = std::function<std::optional<std::string>(const ChatRequest&)>;

  explicit MockChatBackend(std::string name = "mock") : name_(std::move(name)) {}

  void script(const ChatRequest& request, std::string reply);
  void script_hash(std::string hash, std::string reply);
  void script_prefix(std::string user_prompt_prefix, std::string reply);
  void add_responder(Responder responder);

  /// Loads every {request_hash, response} line of a cassette as an exact entry.
  void load_cassette(std::istream& in);
  void load_cassette(const std::filesystem::path& path);

  [[nodiscard]] std::string name() const override { return name_; }
  /// Throws MockMissError naming the request hash when nothing matches.
  ChatResponse complete(const ChatRequest& request) override;

  [[nodiscard]] std::size_t calls() const noexcept { return calls_.load(); }

private:
  std::string name_;
  std::map<std::string, std::string> exact_;
  std::vector<std::pair<std::string, std::string>> prefixes_;
  std::vector<Responder> responders_;
  std::atomic<std::size_t> calls_{0};
};

struct RemoteChatConfig {
  std::string url;  // full endpoint, e.g. http://host:8000/v1/chat/completions
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  RetryPolicy retry;
};

/// OpenAI-compatible chat/completions client.
class RemoteChatBackend final : public ChatBackend {
public:
  RemoteChatBackend(RemoteChatConfig config, HttpTransport& transport);

  [[nodiscard]] std::string name() const override { return "remote:" + config_.model; }
  ChatResponse complete(const ChatRequest& request) override;

  /// Total transport retries performed so far.
  [[nodiscard]] long retries() const noexcept { return retries_.load(); }

private:
  RemoteChatConfig config_;
  HttpTransport& transport_;
  std::atomic<long> retries_{0};
};

struct GatewayOptions {
  std::size_t max_in_flight = 4;
  /// When set, every request/response pair is appended to this JSONL file.
  std::optional<std::filesystem::path> record_to;
};

struct GatewayStats {
  long requests = 0;
  long failures = 0;
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

/// Single choke point for LLM calls; other modules only ever see this handle.
class LlmGateway {
public:
  explicit LlmGateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options = {});

  ChatResponse complete(const ChatRequest& request);
  /// Convenience wrapper building a temperature-0 request.
  std::string ask(std::string system_prompt, std::string user_prompt, int max_tokens = 512);

  [[nodiscard]] std::string backend_name() const { return backend_->name(); }
  [[nodiscard]] GatewayStats stats() const;

private:
  void record(const ChatRequest& request, const ChatResponse& response);

  std::shared_ptr<ChatBackend> backend_;
  std::counting_semaphore<> slots_;
  std::mutex record_mutex_;
  std::ofstream cassette_;
  std::atomic<long> requests_{0};
  std::atomic<long> failures_{0};
  std::atomic<long> prompt_tokens_{0};
  std::atomic<long> completion_tokens_{0};
};

}  // namespace globalrag
