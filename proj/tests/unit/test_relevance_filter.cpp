#include <gtest/gtest.h>

#include <memory>

#include "globalrag/errors.hpp"
#include "globalrag/relevance_filter.hpp"

using namespace globalrag;

namespace {

std::vector<Document> docs(std::size_t n) {
  std::vector<Document> out;
  for (std::size_t i = 0; i < n; ++i) {
    Document d;
    d.id = "d" + std::to_string(i);
    d.text = "resume " + std::to_string(i);
    out.push_back(d);
  }
  return out;
}

std::vector<const Document*> ptrs(const std::vector<Document>& v) {
  std::vector<const Document*> out;
  for (const auto& d : v) out.push_back(&d);
  return out;
}

bool mentions(const ChatRequest& r, const std::string& id) {
  return r.user_prompt.find("document " + id + " ") != std::string::npos;
}

}  // namespace

TEST(ParseRelevance, LeadingWordDecides) {
  EXPECT_EQ(parse_relevance("yes"), Relevance::yes);
  EXPECT_EQ(parse_relevance("  **Yes**, clearly"), Relevance::yes);
  EXPECT_EQ(parse_relevance("\"NO\"."), Relevance::no);
  EXPECT_EQ(parse_relevance("No"), Relevance::no);
  EXPECT_EQ(parse_relevance("nope"), Relevance::unparseable);
  EXPECT_EQ(parse_relevance("yesterday"), Relevance::unparseable);
  EXPECT_EQ(parse_relevance("maybe yes"), Relevance::unparseable);
  EXPECT_EQ(parse_relevance(""), Relevance::unparseable);
}

TEST(Prefilter, ThresholdKeepsOrderAndTopHitFloor) {
  const std::vector<RetrievalHit> hits{{"a", 0.9}, {"b", 0.5}, {"c", 0.2}};
  auto kept = prefilter(hits, 0.5);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].doc_id, "a");
  EXPECT_EQ(kept[1].doc_id, "b");
  kept = prefilter(hits, 0.95);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].doc_id, "a");
  EXPECT_TRUE(prefilter({}, 0.0).empty());
}

TEST(FilterRequest, InlinesQueryAndDocument) {
  Document d;
  d.id = "d7";
  d.text = "Ana Ruiz, nurse";
  const auto r = filter_request("who are nurses?", d);
  EXPECT_NE(r.user_prompt.find("who are nurses?"), std::string::npos);
  EXPECT_NE(r.user_prompt.find("Ana Ruiz, nurse"), std::string::npos);
  EXPECT_FALSE(r.system_prompt.empty());
}

TEST(RelevanceFilter, VerdictsFollowInputOrderUnderParallelism) {
  const auto corpus = docs(40);
  auto mock = std::make_shared<MockChatBackend>();
  mock->add_responder([](const ChatRequest& r) -> std::optional<std::string> {
    // Even-numbered documents are relevant.
    for (int i = 0; i < 40; ++i) {
      if (mentions(r, "d" + std::to_string(i))) return i % 2 == 0 ? "Yes" : "No";
    }
    return std::nullopt;
  });
  LlmGateway gw(mock);
  RelevanceFilter filter(gw, 4);
  const auto p = ptrs(corpus);
  const auto verdicts = filter.judge("q", p);
  ASSERT_EQ(verdicts.size(), 40u);
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_EQ(verdicts[i].doc_id, corpus[i].id);
    EXPECT_EQ(verdicts[i].relevant, i % 2 == 0);
    EXPECT_EQ(verdicts[i].stage, VerdictStage::llm);
  }
  EXPECT_EQ(filter.metrics().llm_calls, 40);
}

TEST(RelevanceFilter, CacheAvoidsRejudgingPerQuery) {
  const auto corpus = docs(5);
  auto mock = std::make_shared<MockChatBackend>();
  mock->add_responder([](const ChatRequest&) { return std::optional<std::string>("yes"); });
  LlmGateway gw(mock);
  RelevanceFilter filter(gw);
  const auto p = ptrs(corpus);
  filter.judge("q", p);
  filter.judge("q", std::span(p).first(3));
  EXPECT_EQ(mock->calls(), 5u);
  EXPECT_EQ(filter.metrics().cache_hits, 3);
  filter.judge("other", std::span(p).first(2));
  EXPECT_EQ(mock->calls(), 7u);
}

TEST(RelevanceFilter, UnparseableReplyCountsAsIrrelevant) {
  const auto corpus = docs(2);
  auto mock = std::make_shared<MockChatBackend>();
  mock->add_responder([](const ChatRequest&) { return std::optional<std::string>("perhaps"); });
  LlmGateway gw(mock);
  RelevanceFilter filter(gw);
  const auto verdicts = filter.judge("q", ptrs(corpus));
  EXPECT_FALSE(verdicts[0].relevant);
  EXPECT_EQ(verdicts[0].rationale, "unparseable");
  EXPECT_EQ(filter.metrics().unparseable, 2);
}

TEST(RelevanceFilter, GatewayFailureKeepsCompletedVerdicts) {
  const auto corpus = docs(4);
  auto mock = std::make_shared<MockChatBackend>();
  mock->add_responder([](const ChatRequest& r) -> std::optional<std::string> {
    if (mentions(r, "d2")) return std::nullopt;  // miss
    return "yes";
  });
  LlmGateway gw(mock);
  RelevanceFilter filter(gw);
  try {
    filter.judge("q", ptrs(corpus));
    FAIL() << "no error";
  } catch (const FilterError& e) {
    ASSERT_EQ(e.partial().size(), 3u);
    EXPECT_EQ(e.partial()[0].doc_id, "d0");
    EXPECT_EQ(e.partial()[2].doc_id, "d3");
  }
}
