#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "globalrag/corpus.hpp"
#include "globalrag/errors.hpp"
#include "globalrag/llm_gateway.hpp"
#include "globalrag/vector_index.hpp"

namespace globalrag {

enum class VerdictStage { prefilter, llm };

std::string_view to_string(VerdictStage stage);

struct FilterVerdict {
  DocId doc_id;
  bool relevant = false;
  VerdictStage stage = VerdictStage::llm;
  std::string rationale;

  bool operator==(const FilterVerdict&) const = default;
};

/// Raised when the gateway fails mid-batch; holds the verdicts that completed.
class FilterError : public Error {
public:
  FilterError(std::vector<FilterVerdict> partial, const std::string& what)
      : Error(what), partial_(std::move(partial)) {}
  [[nodiscard]] const std::vector<FilterVerdict>& partial() const noexcept { return partial_; }

private:
  std::vector<FilterVerdict> partial_;
};

/// Stage one: keeps hits scoring at least `min_score`, in order. The top hit
/// always survives so a non-empty input never filters down to nothing.
std::vector<RetrievalHit> prefilter(std::span<const RetrievalHit> hits, double min_score);

enum class Relevance { yes, no, unparseable };

/// Case-insensitive leading "yes"/"no" (as whole words, after leading
/// whitespace, quotes or markdown emphasis).
Relevance parse_relevance(std::string_view reply);

/// The per-document judgment request with the document text inlined.
ChatRequest filter_request(std::string_view query, const Document& doc);

struct FilterMetrics {
  long llm_calls = 0;
  long cache_hits = 0;
  long unparseable = 0;
};

/// Stage two: one LLM relevance judgment per (query, document), cached so
/// repeated retrieval rounds never re-judge a document.
class RelevanceFilter {
public:
  explicit RelevanceFilter(LlmGateway& gateway, std::size_t max_parallel = 1);

  /// One verdict per input document, in input order. Throws FilterError with
  /// the completed verdicts if the gateway fails.
  std::vector<FilterVerdict> judge(const std::string& query,
                                   std::span<const Document* const> docs);

  [[nodiscard]] FilterMetrics metrics() const;

private:
  FilterVerdict judge_one(const std::string& query, const Document& doc);

  LlmGateway& gateway_;
  std::size_t max_parallel_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, DocId>, FilterVerdict> cache_;
  FilterMetrics metrics_;
};

/// Uncached convenience form of RelevanceFilter::judge.
std::vector<FilterVerdict> llm_filter(const std::string& query,
                                      std::span<const Document* const> docs,
                                      LlmGateway& gateway);

}  // namespace globalrag
