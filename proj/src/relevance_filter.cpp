#include "globalrag/relevance_filter.hpp"

#include <atomic>
#include <cctype>
#include <exception>
#include <optional>
#include <thread>

#include <spdlog/spdlog.h>

#include "globalrag/prompts.hpp"

namespace globalrag {

std::string_view to_string(VerdictStage stage) {
  return stage == VerdictStage::prefilter ? "prefilter" : "llm";
}

std::vector<RetrievalHit> prefilter(std::span<const RetrievalHit> hits, double min_score) {
  std::vector<RetrievalHit> out;
  for (const auto& h : hits) {
    if (h.score >= min_score) out.push_back(h);
  }
  if (out.empty() && !hits.empty()) out.push_back(hits.front());
  return out;
}

Relevance parse_relevance(std::string_view reply) {
  std::size_t i = 0;
  while (i < reply.size()) {
    char c = reply[i];
    if (std::isspace(static_cast<unsigned char>(c)) || c == '"' || c == '\'' || c == '*' ||
        c == '`' || c == '_') {
      ++i;
    } else {
      break;
    }
  }
  auto starts_with_word = [&](std::string_view word) {
    if (reply.size() - i < word.size()) return false;
    for (std::size_t j = 0; j < word.size(); ++j) {
      if (std::tolower(static_cast<unsigned char>(reply[i + j])) != word[j]) return false;
    }
    std::size_t after = i + word.size();
    return after == reply.size() || !std::isalnum(static_cast<unsigned char>(reply[after]));
  };
  if (starts_with_word("yes")) return Relevance::yes;
  if (starts_with_word("no")) return Relevance::no;
  return Relevance::unparseable;
}

ChatRequest filter_request(std::string_view query, const Document& doc) {
  ChatRequest req;
  req.system_prompt = std::string(prompts::kFilterSystem);
  req.user_prompt = prompts::fill(prompts::kFilterUser,
                                  {{"doc_id", doc.id}, {"query", query}, {"text", doc.text}});
  req.max_tokens = 16;
  return req;
}

RelevanceFilter::RelevanceFilter(LlmGateway& gateway, std::size_t max_parallel)
    : gateway_(gateway), max_parallel_(std::max<std::size_t>(1, max_parallel)) {}

FilterVerdict RelevanceFilter::judge_one(const std::string& query, const Document& doc) {
  auto key = std::make_pair(query, doc.id);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      ++metrics_.cache_hits;
      return it->second;
    }
  }
  ChatResponse response = gateway_.complete(filter_request(query, doc));
  FilterVerdict verdict{doc.id, false, VerdictStage::llm, {}};
  switch (parse_relevance(response.text)) {
    case Relevance::yes: verdict.relevant = true; break;
    case Relevance::no: break;
    case Relevance::unparseable: verdict.rationale = "unparseable"; break;
  }
  std::lock_guard lock(mutex_);
  ++metrics_.llm_calls;
  if (verdict.rationale == "unparseable") {
    ++metrics_.unparseable;
    spdlog::debug("unparseable relevance reply for {}: '{}'", doc.id, response.text);
  }
  cache_.emplace(std::move(key), verdict);
  return verdict;
}

std::vector<FilterVerdict> RelevanceFilter::judge(const std::string& query,
                                                  std::span<const Document* const> docs) {
  std::vector<std::optional<FilterVerdict>> results(docs.size());
  std::vector<std::exception_ptr> failures(docs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < docs.size(); i = next++) {
      try {
        results[i] = judge_one(query, *docs[i]);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(max_parallel_, docs.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  std::vector<FilterVerdict> verdicts;
  verdicts.reserve(docs.size());
  std::exception_ptr first_failure;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (results[i]) {
      verdicts.push_back(std::move(*results[i]));
    } else if (!first_failure) {
      first_failure = failures[i];
    }
  }
  if (first_failure) {
    try {
      std::rethrow_exception(first_failure);
    } catch (const std::exception& e) {
      throw FilterError(std::move(verdicts), std::string("relevance filter failed: ") + e.what());
    }
  }
  return verdicts;
}

FilterMetrics RelevanceFilter::metrics() const {
  std::lock_guard lock(mutex_);
  return metrics_;
}

std::vector<FilterVerdict> llm_filter(const std::string& query,
                                      std::span<const Document* const> docs,
                                      LlmGateway& gateway) {
  RelevanceFilter filter(gateway);
  return filter.judge(query, docs);
}

}  // namespace globalrag
