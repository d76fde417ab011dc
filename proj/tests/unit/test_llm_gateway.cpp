#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "globalrag/errors.hpp"
#include "globalrag/hash.hpp"
#include "globalrag/http.hpp"
#include "globalrag/llm_gateway.hpp"
#include "local_server.hpp"

using namespace globalrag;
namespace fs = std::filesystem;

namespace {

ChatRequest req(std::string system, std::string user) {
  ChatRequest r;
  r.system_prompt = std::move(system);
  r.user_prompt = std::move(user);
  return r;
}

RetryPolicy instant_retry(std::vector<std::chrono::milliseconds>* sleeps = nullptr) {
  RetryPolicy p;
  p.max_retries = 3;
  p.initial_backoff = std::chrono::milliseconds(10);
  p.sleep = [sleeps](std::chrono::milliseconds d) {
    if (sleeps) sleeps->push_back(d);
  };
  return p;
}

fs::path temp_file(const std::string& name) {
  auto p = fs::temp_directory_path() / ("globalrag_test_" + name);
  fs::remove(p);
  return p;
}

}  // namespace

TEST(Sha256, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(MockChatBackend, ExactThenPrefixThenResponder) {
  MockChatBackend mock;
  mock.script(req("s", "hello world"), "exact");
  mock.script_prefix("hello", "short prefix");
  mock.script_prefix("hello there", "long prefix");
  mock.add_responder([](const ChatRequest& r) -> std::optional<std::string> {
    if (r.user_prompt == "ping") return "pong";
    return std::nullopt;
  });
  EXPECT_EQ(mock.complete(req("s", "hello world")).text, "exact");
  EXPECT_EQ(mock.complete(req("other", "hello world")).text, "short prefix");
  EXPECT_EQ(mock.complete(req("s", "hello there friend")).text, "long prefix");
  EXPECT_EQ(mock.complete(req("s", "ping")).text, "pong");
  EXPECT_EQ(mock.calls(), 4u);
}

TEST(MockChatBackend, MissCarriesRequestHash) {
  MockChatBackend mock;
  const auto r = req("sys", "unscripted");
  try {
    mock.complete(r);
    FAIL() << "no miss";
  } catch (const MockMissError& e) {
    EXPECT_EQ(e.hash(), request_hash(r));
  }
}

TEST(LlmGateway, RecordedCassetteReplaysIdentically) {
  const auto path = temp_file("cassette.jsonl");
  auto live = std::make_shared<MockChatBackend>();
  live->add_responder([](const ChatRequest& r) { return std::optional<std::string>("echo:" + r.user_prompt); });
  {
    GatewayOptions opts;
    opts.record_to = path;
    LlmGateway gw(live, opts);
    EXPECT_EQ(gw.ask("s", "one"), "echo:one");
    EXPECT_EQ(gw.ask("s", "two"), "echo:two");
  }
  auto replay = std::make_shared<MockChatBackend>();
  replay->load_cassette(path);
  LlmGateway gw(replay);
  EXPECT_EQ(gw.ask("s", "two"), "echo:two");
  EXPECT_EQ(gw.ask("s", "one"), "echo:one");
  EXPECT_THROW(gw.ask("s", "three"), MockMissError);
  EXPECT_EQ(gw.stats().requests, 3);
  EXPECT_EQ(gw.stats().failures, 1);
  fs::remove(path);
}

TEST(LlmGateway, BoundsInFlightCalls) {
  struct Slow final : ChatBackend {
    std::atomic<int> now{0}, peak{0};
    [[nodiscard]] std::string name() const override { return "slow"; }
    ChatResponse complete(const ChatRequest&) override {
      const int n = ++now;
      int p = peak.load();
      while (n > p && !peak.compare_exchange_weak(p, n)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      --now;
      return ChatResponse{"ok", {}};
    }
  };
  auto slow = std::make_shared<Slow>();
  LlmGateway gw(slow, GatewayOptions{2, std::nullopt});
  {
    std::vector<std::jthread> threads;
    for (int t = 0; t < 8; ++t) {
      threads.emplace_back([&] {
        for (int i = 0; i < 4; ++i) gw.ask("s", "u");
      });
    }
  }
  EXPECT_LE(slow->peak.load(), 2);
  EXPECT_EQ(gw.stats().requests, 32);
}

TEST(Retry, TransientStatusesAreRetriedWithBackoff) {
  EXPECT_TRUE(is_transient(0));
  EXPECT_TRUE(is_transient(429));
  EXPECT_TRUE(is_transient(503));
  EXPECT_FALSE(is_transient(400));
  EXPECT_FALSE(is_transient(404));

  struct Flaky final : HttpTransport {
    std::vector<int> statuses;
    std::size_t i = 0;
    HttpResponse post(const std::string&, const std::string&, const HttpHeaders&) override {
      return HttpResponse{statuses.at(i++), "{}"};
    }
  };
  Flaky t;
  t.statuses = {500, 429, 200};
  std::vector<std::chrono::milliseconds> sleeps;
  int retries = -1;
  EXPECT_EQ(post_with_retry(t, "u", "b", {}, instant_retry(&sleeps), &retries).status, 200);
  EXPECT_EQ(retries, 2);
  ASSERT_EQ(sleeps.size(), 2u);
  EXPECT_EQ(sleeps[1], sleeps[0] * 2);

  Flaky bad;
  bad.statuses = {400};
  EXPECT_THROW(post_with_retry(bad, "u", "b", {}, instant_retry()), TransportError);

  Flaky down;
  down.statuses = {0, 0, 0, 0};
  EXPECT_THROW(post_with_retry(down, "u", "b", {}, instant_retry(), &retries), TransportError);
  EXPECT_EQ(retries, 3);
}

TEST(RemoteChatBackend, RecoversFromTwoServerErrors) {
  std::atomic<int> hits{0};
  std::string auth, body_seen;
  testing_support::LocalServer server([&](httplib::Server& s) {
    s.Post("/v1/chat/completions", [&](const httplib::Request& r, httplib::Response& res) {
      if (++hits <= 2) {
        res.status = 500;
        return;
      }
      auth = r.get_header_value("Authorization");
      body_seen = r.body;
      res.set_content(
          R"({"choices":[{"message":{"role":"assistant","content":"yes"}}],"usage":{"prompt_tokens":7,"completion_tokens":1}})",
          "application/json");
    });
  });
  setenv("GLOBALRAG_TEST_KEY", "tok", 1);
  HttplibTransport transport;
  RemoteChatConfig cfg;
  cfg.url = server.url("/v1/chat/completions");
  cfg.model = "small";
  cfg.api_key_env = "GLOBALRAG_TEST_KEY";
  cfg.retry = instant_retry();
  auto backend = std::make_shared<RemoteChatBackend>(cfg, transport);
  LlmGateway gw(backend);
  EXPECT_EQ(gw.ask("judge", "doc?"), "yes");
  EXPECT_EQ(hits.load(), 3);
  EXPECT_EQ(backend->retries(), 2);
  EXPECT_EQ(auth, "Bearer tok");
  EXPECT_EQ(gw.stats().prompt_tokens, 7);
  const auto sent = nlohmann::json::parse(body_seen);
  EXPECT_EQ(sent["model"], "small");
  EXPECT_EQ(sent["messages"][0]["role"], "system");
  EXPECT_EQ(sent["messages"][1]["content"], "doc?");
}

TEST(RemoteChatBackend, MalformedPayloadIsProtocolError) {
  testing_support::LocalServer server([](httplib::Server& s) {
    s.Post("/c", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"choices":[]})", "application/json");
    });
  });
  HttplibTransport transport;
  RemoteChatConfig cfg;
  cfg.url = server.url("/c");
  cfg.retry = instant_retry();
  RemoteChatBackend backend(cfg, transport);
  EXPECT_THROW(backend.complete(req("", "x")), ProtocolError);
}

TEST(RemoteChatBackend, UnreachableEndpointIsTransportError) {
  HttplibTransport transport(std::chrono::seconds(1));
  RemoteChatConfig cfg;
  cfg.url = "http://127.0.0.1:1/none";
  cfg.retry = instant_retry();
  cfg.retry.max_retries = 1;
  RemoteChatBackend backend(cfg, transport);
  EXPECT_THROW(backend.complete(req("", "x")), TransportError);
}
