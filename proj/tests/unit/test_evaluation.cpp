#include <gtest/gtest.h>

#include <random>

#include "globalrag/errors.hpp"
#include "globalrag/evaluation.hpp"
#include "oracles.hpp"

using namespace globalrag;

namespace {

QueryRecord record(std::string id, TaskType task, std::string answer, DocIdSet gold) {
  QueryRecord r;
  r.id = std::move(id);
  r.question = "question " + r.id;
  r.task = task;
  r.gold_answer = std::move(answer);
  r.gold_doc_ids = std::move(gold);
  return r;
}

RunTrace trace(std::string id, std::string answer, std::vector<DocId> retrieved) {
  RunTrace t;
  t.query_id = std::move(id);
  t.answer_text = std::move(answer);
  t.retrieved_ids_at_k = std::move(retrieved);
  return t;
}

std::string random_phrase(std::mt19937_64& rng) {
  static const std::vector<std::string> words{"Ana",  "ben", "the", "a",    "Cy,",  "dee",
                                              "7",    "12",  "an",  "(12)", "Eve.", "ana"};
  std::string out;
  const std::size_t n = rng() % 7;
  for (std::size_t i = 0; i < n; ++i) out += (i ? " " : "") + words[rng() % words.size()];
  return out;
}

}  // namespace

TEST(Normalize, LowercasesStripsPunctuationAndArticles) {
  EXPECT_EQ(normalize_answer("  The Ana Ruiz,  (12)! "), "ana ruiz 12");
  EXPECT_EQ(answer_tokens("a b an c"), (std::vector<std::string>{"b", "c"}));
}

TEST(TokenF1, KnownValues) {
  EXPECT_NEAR(token_f1("software engineering", "software"), 2.0 / 3.0, 1e-12);
  EXPECT_EQ(token_f1("Ana Ruiz (12)", "ana ruiz 12"), 1.0);
  EXPECT_EQ(token_f1("", ""), 1.0);
  EXPECT_EQ(token_f1("x", ""), 0.0);
  EXPECT_EQ(token_f1("the", "cat"), 0.0);
  // Multiset overlap: a repeated token only counts as often as it occurs in both.
  EXPECT_NEAR(token_f1("a1 a1 a1", "a1 b"), 2 * (1.0 / 3) * 0.5 / (1.0 / 3 + 0.5), 1e-12);
}

TEST(TokenF1, MatchesOracleAndIsSymmetric) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 2000; ++i) {
    const auto p = random_phrase(rng);
    const auto g = random_phrase(rng);
    ASSERT_NEAR(token_f1(p, g), oracle::token_f1(p, g), 1e-12) << p << " | " << g;
    ASSERT_DOUBLE_EQ(token_f1(p, g), token_f1(g, p));
  }
}

TEST(DocF1, KnownValuesAndErrors) {
  const std::vector<DocId> retrieved{"d1", "d2", "d3", "d4"};
  EXPECT_NEAR(doc_f1_at_k(retrieved, {"d2", "d3", "d5"}, 4), 4.0 / 7.0, 1e-12);
  EXPECT_NEAR(doc_f1_at_k(retrieved, {"d2", "d3", "d5"}, 2), 0.4, 1e-12);
  EXPECT_EQ(doc_f1_at_k({}, {"d1"}, 5), 0.0);
  EXPECT_EQ(doc_f1_at_k(retrieved, {"d4", "d3", "d2", "d1"}, 10), 1.0);
  EXPECT_THROW(doc_f1_at_k(retrieved, {}, 4), InputError);
  EXPECT_THROW(doc_f1_at_k(retrieved, {"d1"}, 0), InputError);
  const std::vector<DocId> dup{"d1", "d1"};
  EXPECT_THROW(doc_f1_at_k(dup, {"d1"}, 2), InputError);
}

TEST(DocF1, MatchesOracleOnRandomLists) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    std::vector<DocId> pool;
    for (int d = 0; d < 30; ++d) pool.push_back("d" + std::to_string(d));
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::vector<DocId> retrieved(pool.begin(), pool.begin() + static_cast<long>(rng() % 25));
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::vector<DocId> gold(pool.begin(), pool.begin() + 1 + static_cast<long>(rng() % 20));
    const std::size_t k = 1 + rng() % 30;
    ASSERT_NEAR(doc_f1_at_k(retrieved, DocIdSet(gold.begin(), gold.end()), k),
                oracle::doc_f1(retrieved, gold, k), 1e-12);
  }
}

TEST(EvaluateBatch, HandComputedAverages) {
  const std::vector<QueryRecord> data{
      record("q1", TaskType::count, "3", {"a", "b", "c"}),
      record("q2", TaskType::count, "5", {"a", "b"}),
      record("q3", TaskType::sort, "Ana, Ben", {"a", "b"}),
      record("q4", TaskType::topk, "Ana", {"a", "b"}),
      record("q5", TaskType::minmax, "Ana (3)", {"a", "b"}),
      record("q6", TaskType::minmax, "Ben (4)", {"a", "b"}),
      record("q7", TaskType::sort, "x", {}),
      record("q8", TaskType::topk, "Cy", {"c", "d"}),
  };
  const std::vector<RunTrace> traces{
      trace("q1", "3", {"a", "b", "c"}),      // f1 1, d 1
      trace("q2", "4", {"a"}),                // f1 0, d 2/3
      trace("q3", "Ben, Ana", {"a", "b"}),    // f1 1, d 1
      trace("q4", "Ana", {"x"}),              // f1 1, d 0
      trace("q5", "Ana (4)", {"a", "b"}),     // f1 .5, d 1
      trace("q6", "Ben (4)", {"b"}),          // f1 1, d 2/3
      trace("q7", "x", {}),                   // skipped
      trace("q8", "Dee", {"c", "d", "e"}),    // f1 0, d .8
  };
  const auto r = evaluate_batch(traces, data, 20);
  EXPECT_EQ(r.skipped, 1u);
  EXPECT_EQ(r.per_task.at(TaskType::count).n, 2u);
  EXPECT_NEAR(*r.per_task.at(TaskType::count).f1, 0.5, 1e-12);
  EXPECT_NEAR(*r.per_task.at(TaskType::count).d_f1, (1 + 2.0 / 3) / 2, 1e-12);
  EXPECT_NEAR(*r.per_task.at(TaskType::sort).f1, 1.0, 1e-12);
  EXPECT_NEAR(*r.per_task.at(TaskType::topk).f1, 0.5, 1e-12);
  EXPECT_NEAR(*r.per_task.at(TaskType::topk).d_f1, 0.4, 1e-12);
  EXPECT_NEAR(*r.per_task.at(TaskType::minmax).f1, 0.75, 1e-12);
  EXPECT_NEAR(*r.macro_avg.f1, (0.5 + 1 + 0.5 + 0.75) / 4, 1e-12);
  EXPECT_NEAR(*r.micro_avg.f1, 4.5 / 7, 1e-12);
  EXPECT_EQ(r.micro_avg.n, 7u);

  const auto back = report_from_json(to_json(r));
  EXPECT_EQ(to_json(back), to_json(r));
}

TEST(EvaluateBatch, OrphanTracesRaiseJoinError) {
  const std::vector<QueryRecord> data{record("q1", TaskType::count, "1", {"a", "b"})};
  const std::vector<RunTrace> traces{trace("q1", "1", {}), trace("zz", "1", {}),
                                     trace("yy", "1", {})};
  try {
    evaluate_batch(traces, data, 5);
    FAIL() << "no join error";
  } catch (const JoinError& e) {
    EXPECT_EQ(e.orphans(), (std::vector<std::string>{"zz", "yy"}));
  }
}

TEST(ReportTable, EmptyBatchPrintsDashes) {
  const auto r = evaluate_batch({}, {}, 20);
  const auto table = format_report_table(r);
  EXPECT_NE(table.find("TopK"), std::string::npos);
  EXPECT_NE(table.find("D-F1@20"), std::string::npos);
  EXPECT_NE(table.find("—"), std::string::npos);
  EXPECT_FALSE(r.macro_avg.f1);
  EXPECT_TRUE(to_json(r)["macro_avg"]["f1"].is_null());
}

TEST(ReportTable, ValuesArePercentages) {
  const std::vector<QueryRecord> data{record("q1", TaskType::count, "3", {"a", "b"})};
  const std::vector<RunTrace> traces{trace("q1", "3", {"a"})};
  const auto table = format_report_table(evaluate_batch(traces, data, 20));
  EXPECT_NE(table.find("100.00"), std::string::npos);
  EXPECT_NE(table.find("66.67"), std::string::npos);
}
