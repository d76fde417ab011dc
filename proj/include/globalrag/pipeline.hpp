#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "globalrag/aggregation.hpp"
#include "globalrag/corpus.hpp"
#include "globalrag/embedding.hpp"
#include "globalrag/generator.hpp"
#include "globalrag/llm_gateway.hpp"
#include "globalrag/relevance_filter.hpp"
#include "globalrag/task.hpp"
#include "globalrag/vector_index.hpp"

namespace globalrag {

enum class Strategy { globalrag, standard_rag, iterative };
enum class ExtractionMode { structured, llm, text_pattern };

std::string_view to_string(Strategy strategy);
Strategy parse_strategy(std::string_view text);
std::string_view to_string(ExtractionMode mode);
ExtractionMode parse_extraction_mode(std::string_view text);

struct PipelineConfig {
  std::size_t max_iterations = 10;
  std::size_t retrieve_k = 20;
  double prefilter_min_score = 0.0;
  Strategy strategy = Strategy::globalrag;
  ExtractionMode extraction = ExtractionMode::structured;
  std::size_t filter_parallelism = 1;

  /// Throws InputError when max_iterations or retrieve_k is zero.
  void validate() const;
};

nlohmann::json to_json(const PipelineConfig& config);

// ---------------------------------------------------------------------------
// Retrieval sources

class Retriever {
public:
  virtual ~Retriever() = default;
  virtual std::vector<RetrievalHit> retrieve(const std::string& query, std::size_t k) const = 0;
};

/// Embeds the query and scans the index. The embedder must be safe to call
/// from several threads (HashingEmbedder is stateless).
class DenseRetriever final : public Retriever {
public:
  DenseRetriever(const VectorIndex& index, Embedder& embedder);
  std::vector<RetrievalHit> retrieve(const std::string& query, std::size_t k) const override;

private:
  const VectorIndex& index_;
  Embedder& embedder_;
};

/// Returns a fixed id list per exact query string, ignoring k, and nothing for
/// unknown queries. Used to substitute gold documents for retrieval.
class FixedRetriever final : public Retriever {
public:
  explicit FixedRetriever(std::map<std::string, std::vector<DocId>> lists);
  std::vector<RetrievalHit> retrieve(const std::string& query, std::size_t k) const override;

private:
  std::map<std::string, std::vector<DocId>> lists_;
};

/// Gold ids keyed by question text.
FixedRetriever gold_retriever(std::span<const QueryRecord> records);

// ---------------------------------------------------------------------------
// Trace

struct IterationTrace {
  std::string subquery;
  std::vector<DocId> hit_ids;
  std::vector<DocId> surviving_ids;

  bool operator==(const IterationTrace&) const = default;
};

struct RunTrace {
  std::string query_id;
  std::string query;
  Strategy strategy = Strategy::globalrag;
  std::optional<TaskType> task;
  std::optional<TaskPlan> plan;
  std::vector<IterationTrace> iterations;
  std::vector<AttributeRecord> extracted;
  std::optional<AggregationResult> result;
  std::vector<DocId> retrieved_ids_at_k;  // no duplicates
  std::string answer_text;
  std::vector<std::string> errors;

  bool operator==(const RunTrace&) const = default;
};

inline constexpr std::string_view kNoMatchAnswer = "no matching documents";

nlohmann::json to_json(const AggregationResult& result);
nlohmann::json to_json(const RunTrace& trace);
RunTrace trace_from_json(const nlohmann::json& j, std::size_t line = 0);
std::string traces_to_jsonl(std::span<const RunTrace> traces);
std::vector<RunTrace> parse_traces_jsonl(std::istream& in);
std::vector<RunTrace> load_traces(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Stages

/// Template match first, then keyword rules, then (when `gateway` is given)
/// an LLM judgment. Throws ClassificationError when nothing decides.
TaskType classify_task(std::string_view query, LlmGateway* gateway = nullptr);

/// classify_task plus the attribute, direction and k the tool needs.
TaskPlan plan_task(std::string_view query, LlmGateway* gateway = nullptr);

/// Step 0 returns `query`. Later steps ask the gateway; a "DONE" or empty
/// reply returns nullopt. Gateway errors propagate.
std::optional<std::string> plan_subqueries(const std::string& query, std::size_t step,
                                           const RunTrace& prior, LlmGateway& gateway);

/// One record per document that yields a value. `errors` receives one line
/// per skipped document and per gateway failure; extraction stops at the
/// first gateway failure.
std::vector<AttributeRecord> extract_records(std::span<const Document* const> docs,
                                             const std::string& attribute, ExtractionMode mode,
                                             LlmGateway* gateway, std::vector<std::string>& errors);

/// First decimal number in `text` ("12", "-3.5"); nullopt when absent.
std::optional<double> parse_first_number(std::string_view text);

// ---------------------------------------------------------------------------
// Orchestration

/// Shared state for a batch: corpus and retriever are read-only, the filter
/// cache is internally synchronized, so run() may be called concurrently.
class Pipeline {
public:
  /// `reader` serves planning, classification, extraction and baseline
  /// answers; `filter` serves relevance judgments.
  Pipeline(const Corpus& corpus, const Retriever& retriever, LlmGateway& reader,
           LlmGateway& filter, PipelineConfig config);

  [[nodiscard]] const PipelineConfig& config() const noexcept { return config_; }

  /// Dispatches on config().strategy.
  RunTrace run(const std::string& query_id, const std::string& query);
  RunTrace run_globalrag(const std::string& query_id, const std::string& query);
  RunTrace run_baseline(const std::string& query_id, const std::string& query);

  /// Runs every record with up to `jobs` worker threads; traces keep input order.
  std::vector<RunTrace> run_batch(std::span<const QueryRecord> records, std::size_t jobs = 1);

  [[nodiscard]] FilterMetrics filter_metrics() const { return filter_.metrics(); }

private:
  RunTrace run_standard(RunTrace trace);
  RunTrace run_iterative(RunTrace trace);
  std::string context_for(std::span<const DocId> ids) const;

  const Corpus& corpus_;
  const Retriever& retriever_;
  LlmGateway& reader_;
  RelevanceFilter filter_;
  PipelineConfig config_;
};

}  // namespace globalrag
