#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "globalrag/aggregation.hpp"
#include "globalrag/corpus.hpp"

namespace globalrag {

/// The four aggregation task families.
enum class TaskType { count, minmax, sort, topk };

inline constexpr std::array<TaskType, 4> kAllTasks{TaskType::count, TaskType::minmax,
                                                   TaskType::sort, TaskType::topk};

std::string_view to_string(TaskType task);
/// Accepts canonical names plus common spellings ("Count", "MinMax", "TopK",
/// "top-k", "max", "min", "sorting", ...). Throws InputError otherwise.
TaskType parse_task_type(std::string_view text);

/// Everything needed to dispatch a question to a tool. For minmax, desc means
/// max and asc means min. `attribute` is unused by count.
struct TaskPlan {
  TaskType task = TaskType::count;
  std::string attribute;
  Direction direction = Direction::desc;
  std::size_t k = 0;

  bool operator==(const TaskPlan&) const = default;
};

/// Numeric attributes of the resume schema.
struct NumericAttribute {
  std::string_view name;
  std::string_view unit;
  /// Noun phrase used in questions ("years of experience").
  std::string_view noun;
  /// Regex with one capture group recovering the value from rendered text.
  std::string_view text_pattern;
};

inline constexpr std::array<NumericAttribute, 2> kNumericAttributes{{
    {"years_experience", "years", "years of experience",
     R"(with (\d+(?:\.\d+)?) years of professional experience)"},
    {"projects_completed", "projects", "completed projects",
     R"((\d+(?:\.\d+)?) completed projects)"},
}};

const NumericAttribute* find_numeric_attribute(std::string_view name);
const NumericAttribute* find_numeric_attribute_by_noun(std::string_view noun);

/// Unit tag for an attribute; empty when the attribute is not numeric.
std::string unit_for(std::string_view attribute);

/// One record per document, used for counting: attribute "document", value 1.
std::vector<AttributeRecord> entity_records(std::span<const Document* const> docs);

/// Reads `attribute` from Document::attributes; documents without a numeric
/// value for it are skipped.
std::vector<AttributeRecord> structured_records(std::span<const Document* const> docs,
                                                std::string_view attribute);

/// Runs the tool matching `plan.task`.
AggregationResult apply_task(const TaskPlan& plan, std::span<const AttributeRecord> records,
                             const ToolOptions& options = {});

}  // namespace globalrag
