#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "globalrag/corpus.hpp"
#include "globalrag/generator.hpp"
#include "globalrag/pipeline.hpp"
#include "globalrag/task.hpp"

namespace globalrag {

/// Lowercase, punctuation removed, articles a/an/the dropped, whitespace
/// collapsed to single spaces.
std::string normalize_answer(std::string_view text);
std::vector<std::string> answer_tokens(std::string_view text);

/// Multiset token overlap F1 after normalization. Both empty gives 1, exactly
/// one empty gives 0.
double token_f1(std::string_view prediction, std::string_view gold);

/// F1 between the first k retrieved ids and the gold set; precision divides by
/// the truncated list length. Throws InputError on duplicate retrieved ids, an
/// empty gold set or k == 0.
double doc_f1_at_k(std::span<const DocId> retrieved, const DocIdSet& gold, std::size_t k);

struct TaskScore {
  std::optional<double> f1;    // empty when n == 0
  std::optional<double> d_f1;
  std::size_t n = 0;
};

struct EvalReport {
  std::size_t k = 20;
  std::map<TaskType, TaskScore> per_task;  // always holds all four tasks
  TaskScore macro_avg;  // unweighted mean over tasks with n > 0
  TaskScore micro_avg;  // pooled mean over queries
  std::size_t skipped = 0;
};

/// Joins traces to records by id and scores each pair. Traces whose record has
/// an empty gold set are skipped and counted. Throws JoinError listing the
/// trace ids without a record.
EvalReport evaluate_batch(std::span<const RunTrace> traces, std::span<const QueryRecord> dataset,
                          std::size_t k);

nlohmann::json to_json(const EvalReport& report);
/// Inverse of to_json; throws ParseError on a malformed report.
EvalReport report_from_json(const nlohmann::json& j);

/// Fixed-width table with columns TopK, Count, Sort, MinMax, Avg; undefined
/// cells print as a dash.
std::string format_report_table(const EvalReport& report);

}  // namespace globalrag
