#include "globalrag/llm_gateway.hpp"

#include <algorithm>
#include <cstdlib>

#include <spdlog/spdlog.h>

#include "globalrag/errors.hpp"
#include "globalrag/hash.hpp"
#include "globalrag/jsonl.hpp"

namespace globalrag {

std::string request_hash(const ChatRequest& request) {
  std::string key;
  key.reserve(request.system_prompt.size() + request.user_prompt.size() + 1);
  key += request.system_prompt;
  key += '\x1f';
  key += request.user_prompt;
  return sha256_hex(key);
}

nlohmann::json to_json(const ChatRequest& request) {
  nlohmann::json j;
  j["system_prompt"] = request.system_prompt;
  j["user_prompt"] = request.user_prompt;
  j["temperature"] = request.temperature;
  j["max_tokens"] = request.max_tokens;
  return j;
}

nlohmann::json to_json(const ChatResponse& response) {
  nlohmann::json j;
  j["text"] = response.text;
  j["usage"] = {{"prompt_tokens", response.usage.prompt_tokens},
                {"completion_tokens", response.usage.completion_tokens}};
  return j;
}

// ---------------------------------------------------------------------------
// Mock

void MockChatBackend::script(const ChatRequest& request, std::string reply) {
  exact_[request_hash(request)] = std::move(reply);
}

void MockChatBackend::script_hash(std::string hash, std::string reply) {
  exact_[std::move(hash)] = std::move(reply);
}

void MockChatBackend::script_prefix(std::string user_prompt_prefix, std::string reply) {
  prefixes_.emplace_back(std::move(user_prompt_prefix), std::move(reply));
  std::stable_sort(prefixes_.begin(), prefixes_.end(),
                   [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
}

void MockChatBackend::add_responder(Responder responder) {
  responders_.push_back(std::move(responder));
}

void MockChatBackend::load_cassette(std::istream& in) {
  jsonl::for_each_line(in, [&](std::size_t line, const nlohmann::json& obj) {
    if (!obj.contains("request_hash") || !obj.contains("response")) {
      throw ParseError(line, "cassette entry needs 'request_hash' and 'response'");
    }
    script_hash(obj["request_hash"].get<std::string>(),
                obj["response"].at("text").get<std::string>());
  });
}

void MockChatBackend::load_cassette(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open cassette " + path.string());
  load_cassette(in);
}

ChatResponse MockChatBackend::complete(const ChatRequest& request) {
  ++calls_;
  auto respond = [](std::string text) {
    ChatResponse r;
    r.text = std::move(text);
    return r;
  };
  const std::string hash = request_hash(request);
  if (auto it = exact_.find(hash); it != exact_.end()) return respond(it->second);
  for (const auto& [prefix, reply] : prefixes_) {
    if (request.user_prompt.starts_with(prefix)) return respond(reply);
  }
  for (const auto& responder : responders_) {
    if (auto reply = responder(request)) return respond(std::move(*reply));
  }
  throw MockMissError(hash);
}

// ---------------------------------------------------------------------------
// Remote

RemoteChatBackend::RemoteChatBackend(RemoteChatConfig config, HttpTransport& transport)
    : config_(std::move(config)), transport_(transport) {
  if (config_.url.empty()) throw Error("remote chat backend needs an endpoint URL");
}

ChatResponse RemoteChatBackend::complete(const ChatRequest& request) {
  nlohmann::json body;
  body["model"] = config_.model;
  body["messages"] = nlohmann::json::array();
  if (!request.system_prompt.empty()) {
    body["messages"].push_back({{"role", "system"}, {"content", request.system_prompt}});
  }
  body["messages"].push_back({{"role", "user"}, {"content", request.user_prompt}});
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;

  HttpHeaders headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }
  int retries = 0;
  HttpResponse res;
  try {
    res = post_with_retry(transport_, config_.url, body.dump(), headers, config_.retry, &retries);
  } catch (...) {
    retries_ += retries;
    throw;
  }
  retries_ += retries;

  nlohmann::json payload;
  try {
    payload = nlohmann::json::parse(res.body);
  } catch (const nlohmann::json::parse_error&) {
    throw ProtocolError("chat endpoint returned non-JSON body");
  }
  try {
    ChatResponse out;
    const auto& content = payload.at("choices").at(0).at("message").at("content");
    out.text = content.is_null() ? std::string() : content.get<std::string>();
    if (auto u = payload.find("usage"); u != payload.end() && u->is_object()) {
      out.usage.prompt_tokens = u->value("prompt_tokens", 0L);
      out.usage.completion_tokens = u->value("completion_tokens", 0L);
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed chat completion payload: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Gateway

LlmGateway::LlmGateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options)
    : backend_(std::move(backend)),
      slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, options.max_in_flight))) {
  if (!backend_) throw Error("gateway needs a backend");
  if (options.record_to) {
    cassette_.open(*options.record_to, std::ios::binary | std::ios::app);
    if (!cassette_) throw SaveError("cannot open cassette " + options.record_to->string());
  }
}

ChatResponse LlmGateway::complete(const ChatRequest& request) {
  ++requests_;
  ChatResponse response;
  slots_.acquire();
  try {
    response = backend_->complete(request);
  } catch (...) {
    slots_.release();
    ++failures_;
    throw;
  }
  slots_.release();
  prompt_tokens_ += response.usage.prompt_tokens;
  completion_tokens_ += response.usage.completion_tokens;
  if (cassette_.is_open()) record(request, response);
  return response;
}

std::string LlmGateway::ask(std::string system_prompt, std::string user_prompt, int max_tokens) {
  ChatRequest req;
  req.system_prompt = std::move(system_prompt);
  req.user_prompt = std::move(user_prompt);
  req.max_tokens = max_tokens;
  return complete(req).text;
}

GatewayStats LlmGateway::stats() const {
  return {requests_.load(), failures_.load(), prompt_tokens_.load(), completion_tokens_.load()};
}

void LlmGateway::record(const ChatRequest& request, const ChatResponse& response) {
  nlohmann::json line;
  line["request_hash"] = request_hash(request);
  line["request"] = to_json(request);
  line["response"] = to_json(response);
  std::lock_guard lock(record_mutex_);
  cassette_ << line.dump() << '\n';
  cassette_.flush();
}

}  // namespace globalrag
