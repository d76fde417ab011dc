#include <gtest/gtest.h>

#include <random>

#include "globalrag/aggregation.hpp"
#include "globalrag/errors.hpp"
#include "globalrag/task.hpp"
#include "oracles.hpp"

using namespace globalrag;

namespace {

AttributeRecord rec(std::string id, double v, std::string unit = "years") {
  return {id, "name " + id, "years_experience", v, std::move(unit)};
}

std::vector<std::string> ids(const std::vector<RankedEntry>& v) {
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(e.entity_id);
  return out;
}

}  // namespace

TEST(CountTool, CountsDistinctEntities) {
  const std::vector<AttributeRecord> r{rec("a", 1), rec("b", 2), rec("a", 3)};
  const auto res = count_tool(r);
  EXPECT_EQ(res.kind, AggregationKind::count);
  EXPECT_EQ(res.count_value, 2u);
  EXPECT_EQ(res.answer_text, "2");
  EXPECT_EQ(count_tool({}).answer_text, "0");
}

TEST(ExtremumTool, TiesGoToSmallerIdAndAnswerCarriesValue) {
  const std::vector<AttributeRecord> r{rec("c", 7), rec("b", 7), rec("a", 2)};
  const auto mx = extremum_tool(r, Extremum::max);
  EXPECT_EQ(mx.kind, AggregationKind::max);
  EXPECT_EQ(mx.answer_text, "name b (7)");
  EXPECT_EQ(extremum_tool(r, Extremum::min).answer_text, "name a (2)");
}

TEST(ExtremumTool, DuplicatePolicyApplies) {
  const std::vector<AttributeRecord> r{rec("a", 10), rec("a", 1), rec("b", 5)};
  EXPECT_EQ(extremum_tool(r, Extremum::min).ranked->front().entity_id, "b");
  EXPECT_EQ(extremum_tool(r, Extremum::min, {DuplicatePolicy::keep_min}).ranked->front().entity_id,
            "a");
  EXPECT_EQ(
      extremum_tool(r, Extremum::max, {DuplicatePolicy::keep_first}).ranked->front().value, 10);
}

TEST(AggregationTools, RejectBadInput) {
  EXPECT_THROW(extremum_tool({}, Extremum::max), EmptyInputError);
  EXPECT_THROW(sort_tool({}, Direction::asc), EmptyInputError);
  const std::vector<AttributeRecord> mixed{rec("a", 1, "years"), rec("b", 2, "months")};
  EXPECT_THROW(sort_tool(mixed, Direction::asc), UnitError);
  std::vector<AttributeRecord> text{rec("a", 1)};
  text[0].value = std::string("five");
  EXPECT_THROW(topk_tool(text, 1, Direction::desc), ValueTypeError);
  EXPECT_THROW(topk_tool(std::vector{rec("a", 1)}, 0, Direction::desc), InputError);
}

TEST(SortTool, EqualValuesKeepAscendingIdInBothDirections) {
  const std::vector<AttributeRecord> r{rec("d", 3), rec("b", 3), rec("a", 9), rec("c", 1)};
  EXPECT_EQ(ids(*sort_tool(r, Direction::desc).ranked), (std::vector<std::string>{"a", "b", "d", "c"}));
  EXPECT_EQ(ids(*sort_tool(r, Direction::asc).ranked), (std::vector<std::string>{"c", "b", "d", "a"}));
  EXPECT_EQ(sort_tool(r, Direction::asc).answer_text, "name c, name b, name d, name a");
}

TEST(TopkTool, KLargerThanEntitiesReturnsAll) {
  const std::vector<AttributeRecord> r{rec("a", 1), rec("b", 2)};
  const auto res = topk_tool(r, 10, Direction::desc);
  EXPECT_EQ(ids(*res.ranked), (std::vector<std::string>{"b", "a"}));
}

TEST(AggregationTools, AgreeWithBruteForceOnRandomRecords) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const auto r = oracle::random_records(rng);
    const auto dir = trial % 2 ? Direction::asc : Direction::desc;
    ASSERT_EQ(count_tool(r).count_value, oracle::count(r));
    ASSERT_EQ(*sort_tool(r, dir).ranked, oracle::sort(r, dir));
    const std::size_t k = 1 + rng() % 12;
    ASSERT_EQ(*topk_tool(r, k, dir).ranked, oracle::topk(r, k, dir));
    ASSERT_EQ(extremum_tool(r, Extremum::max).ranked->front(), oracle::extremum(r, true));
    ASSERT_EQ(extremum_tool(r, Extremum::min).ranked->front(), oracle::extremum(r, false));
  }
}

TEST(SetCombine, FoldsLeftToRight) {
  const std::vector<DocIdSet> sets{{"a", "b", "c"}, {"b", "c", "d"}, {"c", "e"}};
  EXPECT_EQ(set_combine(sets, SetOp::intersect), (DocIdSet{"c"}));
  EXPECT_EQ(set_combine(sets, SetOp::unite), (DocIdSet{"a", "b", "c", "d", "e"}));
  EXPECT_TRUE(set_combine({}, SetOp::unite).empty());
  EXPECT_EQ(parse_set_op(to_string(SetOp::intersect)), SetOp::intersect);
  EXPECT_THROW(parse_set_op("xor"), InputError);
}

TEST(ApplyTask, DispatchesOnPlan) {
  const std::vector<AttributeRecord> r{rec("a", 4), rec("b", 8), rec("c", 6)};
  TaskPlan plan{TaskType::topk, "years_experience", Direction::desc, 2};
  EXPECT_EQ(apply_task(plan, r).answer_text, "name b, name c");
  plan = {TaskType::minmax, "years_experience", Direction::asc, 0};
  EXPECT_EQ(apply_task(plan, r).answer_text, "name a (4)");
  plan = {TaskType::count, "", Direction::desc, 0};
  EXPECT_EQ(apply_task(plan, r).answer_text, "3");
}

TEST(TaskType, ParsesCommonSpellings) {
  EXPECT_EQ(parse_task_type("TopK"), TaskType::topk);
  EXPECT_EQ(parse_task_type("top-k"), TaskType::topk);
  EXPECT_EQ(parse_task_type("MinMax"), TaskType::minmax);
  EXPECT_EQ(parse_task_type("Count"), TaskType::count);
  EXPECT_THROW(parse_task_type("median"), InputError);
}
