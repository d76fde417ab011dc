#include "globalrag/task.hpp"

#include <algorithm>
#include <cctype>

#include "globalrag/errors.hpp"

namespace globalrag {

std::string_view to_string(TaskType task) {
  switch (task) {
    case TaskType::count: return "count";
    case TaskType::minmax: return "minmax";
    case TaskType::sort: return "sort";
    case TaskType::topk: return "topk";
  }
  return "?";
}

TaskType parse_task_type(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (s == "count" || s == "counting") return TaskType::count;
  if (s == "minmax" || s == "extremum" || s == "max" || s == "min" || s == "maxmin") {
    return TaskType::minmax;
  }
  if (s == "sort" || s == "sorting" || s == "ranking") return TaskType::sort;
  if (s == "topk" || s == "topkextraction") return TaskType::topk;
  throw InputError("unknown task type '" + std::string(text) + "'");
}

const NumericAttribute* find_numeric_attribute(std::string_view name) {
  for (const auto& a : kNumericAttributes) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

const NumericAttribute* find_numeric_attribute_by_noun(std::string_view noun) {
  for (const auto& a : kNumericAttributes) {
    if (a.noun == noun) return &a;
  }
  return nullptr;
}

std::string unit_for(std::string_view attribute) {
  const auto* a = find_numeric_attribute(attribute);
  return a ? std::string(a->unit) : std::string();
}

std::vector<AttributeRecord> entity_records(std::span<const Document* const> docs) {
  std::vector<AttributeRecord> out;
  out.reserve(docs.size());
  for (const Document* d : docs) {
    out.push_back(AttributeRecord{d->id, d->label(), "document", 1.0, ""});
  }
  return out;
}

std::vector<AttributeRecord> structured_records(std::span<const Document* const> docs,
                                                std::string_view attribute) {
  std::vector<AttributeRecord> out;
  const std::string unit = unit_for(attribute);
  for (const Document* d : docs) {
    const AttributeValue* v = d->attribute(attribute);
    if (!v) continue;
    if (const auto* x = std::get_if<double>(v)) {
      out.push_back(AttributeRecord{d->id, d->label(), std::string(attribute), *x, unit});
    }
  }
  return out;
}

AggregationResult apply_task(const TaskPlan& plan, std::span<const AttributeRecord> records,
                             const ToolOptions& options) {
  switch (plan.task) {
    case TaskType::count: return count_tool(records);
    case TaskType::minmax:
      return extremum_tool(records, plan.direction == Direction::desc ? Extremum::max : Extremum::min,
                           options);
    case TaskType::sort: return sort_tool(records, plan.direction, options);
    case TaskType::topk: return topk_tool(records, plan.k, plan.direction, options);
  }
  throw InputError("unhandled task type");
}

}  // namespace globalrag
