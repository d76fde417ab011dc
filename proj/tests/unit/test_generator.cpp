#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>
#include <sstream>

#include "globalrag/errors.hpp"
#include "globalrag/generator.hpp"
#include "globalrag/question_templates.hpp"
#include "oracles.hpp"

using namespace globalrag;

namespace {

const Corpus& shared_corpus() {
  static const Corpus corpus = generate_corpus(11, 600, 23);
  return corpus;
}

const std::vector<QueryRecord>& shared_dataset() {
  static const std::vector<QueryRecord> records = [] {
    DatasetConfig cfg;
    cfg.seed = 5;
    cfg.count = 120;
    return generate_dataset(shared_corpus(), cfg);
  }();
  return records;
}

}  // namespace

TEST(GenerateCorpus, DeterministicAndDomainBalanced) {
  const auto a = generate_corpus(1, 100, 7);
  EXPECT_EQ(a, generate_corpus(1, 100, 7));
  EXPECT_NE(a, generate_corpus(2, 100, 7));
  std::map<std::string, int> per_domain;
  for (const auto& d : a) {
    ++per_domain[d.domain];
    EXPECT_TRUE(attributes_rendered(d)) << d.id;
    const auto years = std::get<double>(*d.attribute("years_experience"));
    EXPECT_GE(years, 0);
    EXPECT_LE(years, 40);
  }
  ASSERT_EQ(per_domain.size(), 7u);
  for (const auto& [_, n] : per_domain) {
    EXPECT_GE(n, 14);
    EXPECT_LE(n, 15);
  }
  EXPECT_EQ(a[0].id, "d00001");
}

TEST(Buckets, RangesAreContiguous) {
  EXPECT_FALSE(bucket_of(1));
  EXPECT_EQ(bucket_of(2), DocCountBucket::two_to_five);
  EXPECT_EQ(bucket_of(5), DocCountBucket::two_to_five);
  EXPECT_EQ(bucket_of(6), DocCountBucket::five_to_ten);
  EXPECT_EQ(bucket_of(20), DocCountBucket::ten_to_twenty);
  EXPECT_EQ(bucket_of(50), DocCountBucket::over_twenty);
  EXPECT_FALSE(bucket_of(51));
  for (auto b : kAllBuckets) EXPECT_EQ(parse_bucket(to_string(b)), b);
}

TEST(AllocateQuota, LargestRemainderSumsToTotal) {
  const std::array<double, 3> shares{1, 1, 1};
  EXPECT_EQ(allocate_quota(shares, 10), (std::vector<std::size_t>{4, 3, 3}));
  for (std::size_t total : {0u, 1u, 7u, 2000u, 2001u}) {
    const auto q = allocate_quota(kDefaultTaskMix, total);
    EXPECT_EQ(std::accumulate(q.begin(), q.end(), std::size_t{0}), total);
  }
  const auto q = allocate_quota(kDefaultBucketMix, 1000);
  EXPECT_EQ(q, (std::vector<std::size_t>{181, 134, 259, 426}));
}

TEST(Sampler, TrajectoriesHitTheirBucketAndMatchOracle) {
  TrajectorySampler sampler(shared_corpus());
  std::mt19937_64 rng(3);
  for (int i = 0; i < 80; ++i) {
    const auto bucket = kAllBuckets[static_cast<std::size_t>(i) % 4];
    const auto t = sampler.sample(rng, bucket, kAllTasks[static_cast<std::size_t>(i / 4) % 4]);
    ASSERT_NO_THROW(validate_trajectory(t));
    const auto exec = execute_trajectory(t, shared_corpus());
    EXPECT_EQ(bucket_of(exec.gold_doc_ids.size()), bucket);
    const auto oracle_ids = oracle::gold_ids(t, shared_corpus());
    EXPECT_EQ(std::vector<DocId>(exec.gold_doc_ids.begin(), exec.gold_doc_ids.end()), oracle_ids);
    EXPECT_EQ(exec.gold_answer, oracle::gold_answer(t, shared_corpus()));
  }
}

TEST(Sampler, ImpossibleTargetRaisesSamplingError) {
  const Corpus tiny = generate_corpus(1, 3, 1);
  std::mt19937_64 rng(1);
  SamplerConfig cfg;
  cfg.max_attempts = 20;
  EXPECT_THROW(sample_trajectory(rng, tiny, DocCountBucket::over_twenty, std::nullopt, cfg),
               SamplingError);
}

TEST(Trajectory, ValidationRejectsBadShapes) {
  const auto& rec = shared_dataset().front();
  Trajectory t = *rec.trajectory;
  EXPECT_NO_THROW(validate_trajectory(t));
  Trajectory single = t;
  single.steps.resize(1);
  single.set_ops = SetOpNode{0, SetOp::intersect, {}};
  EXPECT_THROW(validate_trajectory(single), InputError);
  Trajectory orphan = t;
  orphan.steps.push_back(orphan.steps.front());
  if (orphan.steps.size() <= 5) {
    EXPECT_THROW(validate_trajectory(orphan), InputError);
  }
}

TEST(Trajectory, JsonRoundTrip) {
  for (const auto& r : shared_dataset()) {
    EXPECT_EQ(trajectory_from_json(to_json(*r.trajectory)), *r.trajectory);
  }
}

TEST(Questions, RenderingInvertsThroughTemplateMatch) {
  for (const auto& r : shared_dataset()) {
    const auto m = match_question(r.question);
    ASSERT_TRUE(m) << r.question;
    EXPECT_EQ(m->template_id, r.trajectory->template_id);
    EXPECT_EQ(m->plan.task, r.task);
    if (r.task != TaskType::count) {
      EXPECT_EQ(m->plan.attribute, r.trajectory->task.attribute);
      EXPECT_EQ(m->plan.direction, r.trajectory->task.direction);
    }
    if (r.task == TaskType::topk) {
      EXPECT_EQ(m->plan.k, r.trajectory->task.k);
    }
    EXPECT_EQ(m->conditions, render_conditions(*r.trajectory));
  }
}

TEST(GenerateDataset, PureInCorpusAndConfig) {
  DatasetConfig cfg;
  cfg.seed = 5;
  cfg.count = 120;
  GenerationReport report;
  const auto again = generate_dataset(shared_corpus(), cfg, &report);
  EXPECT_EQ(again, shared_dataset());
  EXPECT_EQ(report.requested, 120u);
  EXPECT_EQ(report.generated, again.size());
  cfg.seed = 6;
  EXPECT_NE(generate_dataset(shared_corpus(), cfg), shared_dataset());
}

TEST(GenerateDataset, RecordsPassValidationAndJsonRoundTrip) {
  const auto& records = shared_dataset();
  ValidationReport report;
  const auto kept = validate_records(records, shared_corpus(), report);
  EXPECT_EQ(kept.size(), records.size());
  EXPECT_TRUE(report.rejections.empty());
  std::istringstream in(dataset_to_jsonl(records));
  EXPECT_EQ(parse_dataset_jsonl(in), records);
}

TEST(Validation, RejectsEachFailureKind) {
  const auto& base = shared_dataset();
  std::vector<QueryRecord> bad(base.begin(), base.begin() + 5);
  // [0] stays valid; [1] duplicates its question.
  bad[1] = bad[0];
  bad[2].gold_doc_ids = {"d00001"};
  bad[2].bucket.reset();
  for (int i = 0; i < 60; ++i) bad[3].gold_doc_ids.insert("x" + std::to_string(i));
  bad[3].bucket.reset();
  bad[4].gold_answer = "tampered";
  ValidationReport report;
  const auto kept = validate_records(bad, shared_corpus(), report);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(report.rejections["duplicate_question"], 1u);
  EXPECT_EQ(report.rejections["doc_count_too_small"], 1u);
  EXPECT_EQ(report.rejections["doc_count_exceeded"], 1u);
  EXPECT_EQ(report.rejections["consistency"], 1u);
}

TEST(Validation, SaveWritesOnlySurvivors) {
  const auto path = std::filesystem::temp_directory_path() / "globalrag_test_dataset.jsonl";
  auto records = std::vector<QueryRecord>(shared_dataset().begin(), shared_dataset().begin() + 3);
  records.push_back(records.front());
  const auto report = validate_and_save(records, shared_corpus(), path);
  EXPECT_EQ(report.saved, 3u);
  EXPECT_EQ(load_dataset(path).size(), 3u);
  std::filesystem::remove(path);
}

TEST(QueryRecord, AcceptsAliasedFieldNames) {
  const auto j = nlohmann::json::parse(
      R"({"id":"x","query":"How many?","type":"Count","answer":"2","doc_ids":["a","b"]})");
  const auto r = record_from_json(j);
  EXPECT_EQ(r.question, "How many?");
  EXPECT_EQ(r.task, TaskType::count);
  EXPECT_EQ(r.gold_doc_ids, (DocIdSet{"a", "b"}));
  EXPECT_FALSE(r.trajectory);
  EXPECT_THROW(record_from_json(nlohmann::json::parse(R"({"id":"x"})"), 4), ParseError);
}
