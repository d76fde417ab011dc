#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "globalrag/aggregation.hpp"
#include "globalrag/corpus.hpp"
#include "globalrag/predicate.hpp"
#include "globalrag/task.hpp"

namespace globalrag {

// ---------------------------------------------------------------------------
// Synthetic resume corpus

/// Seeded synthetic resumes. Domains are assigned round-robin and shuffled, so
/// every domain holds n_docs / n_domains documents (+1 for the remainder).
/// Each document gets name, location, education, years_experience (0-40),
/// projects_completed, and 3-8 skills drawn mostly from its domain's pool.
Corpus generate_corpus(std::uint64_t seed, std::size_t n_docs, std::size_t n_domains);

/// Built-in domain names, in the order generate_corpus uses them.
std::span<const std::string_view> domain_catalog();

// ---------------------------------------------------------------------------
// Trajectories

enum class StepKind { keyword_retrieval, semantic_retrieval };

std::string_view to_string(StepKind kind);

struct TrajectoryStep {
  StepKind kind = StepKind::keyword_retrieval;
  Predicate predicate;
  std::string query_text;  // relative-clause rendering, e.g. "are based in Denver"

  bool operator==(const TrajectoryStep&) const = default;
};

/// Set-operation tree over step results. Leaves reference one step each.
struct SetOpNode {
  std::optional<std::size_t> step;
  SetOp op = SetOp::intersect;
  std::vector<SetOpNode> children;

  [[nodiscard]] bool is_leaf() const noexcept { return step.has_value(); }
  bool operator==(const SetOpNode&) const = default;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  SetOpNode set_ops;
  TaskPlan task;
  std::size_t template_id = 0;

  bool operator==(const Trajectory&) const = default;
};

/// Throws InputError unless 2-5 steps are present and every step is
/// referenced exactly once by the tree.
void validate_trajectory(const Trajectory& trajectory);

/// The phrase a question uses for `predicate` ("have at least 10 years of
/// experience"). Semantic predicates are named by their synonym group.
std::string describe_predicate(const Predicate& predicate);

enum class DocCountBucket { two_to_five, five_to_ten, ten_to_twenty, over_twenty };

inline constexpr std::array<DocCountBucket, 4> kAllBuckets{
    DocCountBucket::two_to_five, DocCountBucket::five_to_ten, DocCountBucket::ten_to_twenty,
    DocCountBucket::over_twenty};

struct BucketRange {
  std::size_t lo;
  std::size_t hi;
};

/// Inclusive size ranges: [2,5], [6,10], [11,20], [21,50].
BucketRange bucket_range(DocCountBucket bucket);
std::optional<DocCountBucket> bucket_of(std::size_t gold_size);
std::string_view to_string(DocCountBucket bucket);
DocCountBucket parse_bucket(std::string_view text);

inline constexpr std::size_t kMaxGoldDocs = 50;
inline constexpr std::size_t kMinGoldDocs = 2;

struct SamplerConfig {
  std::size_t max_attempts = 200;
  std::size_t min_steps = 2;
  std::size_t max_steps = 5;
  double semantic_share = 0.35;
  double intersect_share = 0.6;
};

/// Rejection sampler for trajectories whose executed gold set lands in a
/// target bucket. Caches per-predicate scans as bitsets; not thread-safe.
class TrajectorySampler {
public:
  explicit TrajectorySampler(const Corpus& corpus, SamplerConfig config = {});
  ~TrajectorySampler();
  TrajectorySampler(const TrajectorySampler&) = delete;
  TrajectorySampler& operator=(const TrajectorySampler&) = delete;

  /// Throws SamplingError once config.max_attempts draws all miss the bucket.
  /// When `task` is empty a task type is drawn uniformly.
  Trajectory sample(std::mt19937_64& rng, DocCountBucket target,
                    std::optional<TaskType> task = std::nullopt);

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot form of TrajectorySampler::sample.
Trajectory sample_trajectory(std::mt19937_64& rng, const Corpus& corpus, DocCountBucket target,
                             std::optional<TaskType> task = std::nullopt,
                             const SamplerConfig& config = {});

struct ExecutionResult {
  DocIdSet gold_doc_ids;
  std::string gold_answer;
  AggregationResult result;
};

/// Deterministic execution: scan per step, fold the set-op tree, run the task
/// tool on structured attributes. Throws DegenerateTrajectoryError when the
/// combined set is empty.
ExecutionResult execute_trajectory(const Trajectory& trajectory, const Corpus& corpus);

/// Relative clause for the whole set-op tree.
std::string render_conditions(const Trajectory& trajectory);
std::string render_question(const Trajectory& trajectory);

nlohmann::json to_json(const Trajectory& trajectory);
Trajectory trajectory_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Dataset records

struct QueryRecord {
  std::string id;
  std::string question;
  TaskType task = TaskType::count;
  std::string gold_answer;
  DocIdSet gold_doc_ids;
  std::optional<Trajectory> trajectory;  // absent for externally sourced data
  std::optional<DocCountBucket> bucket;

  bool operator==(const QueryRecord&) const = default;
};

nlohmann::json to_json(const QueryRecord& record);
/// Accepts the native field names plus common aliases (query, answer,
/// doc_ids, type, ...). Throws ParseError with `line`.
QueryRecord record_from_json(const nlohmann::json& j, std::size_t line = 0);

std::string dataset_to_jsonl(std::span<const QueryRecord> records);
std::vector<QueryRecord> parse_dataset_jsonl(std::istream& in);
std::vector<QueryRecord> load_dataset(const std::filesystem::path& path);

/// Shares in task order (count, minmax, sort, topk) and bucket order
/// (2-5, 5-10, 10-20, 20+).
inline constexpr std::array<double, 4> kDefaultTaskMix{0.167, 0.339, 0.163, 0.339};
inline constexpr std::array<double, 4> kDefaultBucketMix{0.181, 0.134, 0.259, 0.426};

/// Largest-remainder apportionment of `total` items over normalized `shares`.
std::vector<std::size_t> allocate_quota(std::span<const double> shares, std::size_t total);

struct DatasetConfig {
  std::uint64_t seed = 0;
  std::size_t count = 100;
  std::array<double, 4> task_mix = kDefaultTaskMix;
  std::array<double, 4> bucket_mix = kDefaultBucketMix;
  SamplerConfig sampler;
  /// Fresh seed streams tried per slot before the slot is given up.
  std::size_t slot_retries = 20;
};

struct GenerationReport {
  std::size_t requested = 0;
  std::size_t generated = 0;
  std::map<std::string, std::size_t> failed_slots;  // by bucket label
};

/// Builds `config.count` records with task and bucket quotas fixed up front,
/// each slot using its own derived seed stream. Pure in (corpus, config).
std::vector<QueryRecord> generate_dataset(const Corpus& corpus, const DatasetConfig& config,
                                          GenerationReport* report = nullptr);

struct ValidationReport {
  std::size_t saved = 0;
  std::map<std::string, std::size_t> rejections;  // reason -> count
};

/// Drops records with |gold| outside [2, 50] ("doc_count_exceeded",
/// "doc_count_too_small"), re-execution mismatches ("consistency") and
/// repeated questions ("duplicate_question"). Survivors keep their order.
std::vector<QueryRecord> validate_records(std::span<const QueryRecord> records,
                                          const Corpus& corpus, ValidationReport& report);

/// validate_records, then writes survivors as JSONL via write-then-rename.
ValidationReport validate_and_save(std::span<const QueryRecord> records, const Corpus& corpus,
                                   const std::filesystem::path& path);

nlohmann::json to_json(const ValidationReport& report);

}  // namespace globalrag
