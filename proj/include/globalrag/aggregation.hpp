#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "globalrag/corpus.hpp"

namespace globalrag {

using RecordValue = std::variant<double, std::string>;

/// One extracted (entity, attribute, value) fact.
struct AttributeRecord {
  DocId entity_id;
  std::string entity_label;
  std::string attribute;
  RecordValue value;
  std::string unit;

  bool operator==(const AttributeRecord&) const = default;
};

enum class AggregationKind { count, min, max, sort, topk };
enum class Direction { asc, desc };
enum class Extremum { min, max };

std::string_view to_string(AggregationKind kind);
std::string_view to_string(Direction direction);
Direction parse_direction(std::string_view text);

/// How several records for one entity collapse to a single value before any
/// ranking. Every ranking tool (extremum, sort, top-k) applies the same rule.
enum class DuplicatePolicy { keep_max, keep_min, keep_first };

struct ToolOptions {
  DuplicatePolicy duplicates = DuplicatePolicy::keep_max;
};

struct RankedEntry {
  DocId entity_id;
  std::string label;
  double value = 0.0;

  bool operator==(const RankedEntry&) const = default;
};

struct AggregationResult {
  AggregationKind kind = AggregationKind::count;
  std::optional<std::size_t> count_value;      // count only
  std::optional<std::vector<RankedEntry>> ranked;  // min, max, sort, topk
  std::string answer_text;

  bool operator==(const AggregationResult&) const = default;
};

/// Number of distinct entity ids. Never throws.
AggregationResult count_tool(std::span<const AttributeRecord> records);

/// Entity with the smallest or largest value, ties to the smaller entity id.
/// Throws EmptyInputError, UnitError (mixed units) or ValueTypeError.
AggregationResult extremum_tool(std::span<const AttributeRecord> records, Extremum which,
                                const ToolOptions& options = {});

/// Full ranking, one entry per entity; equal values order by ascending id in
/// both directions. Errors as extremum_tool.
AggregationResult sort_tool(std::span<const AttributeRecord> records, Direction direction,
                            const ToolOptions& options = {});

/// First min(k, entities) entries of sort_tool's ranking, selected with a
/// bounded heap of size k. Errors as extremum_tool; k must be positive.
AggregationResult topk_tool(std::span<const AttributeRecord> records, std::size_t k,
                            Direction direction, const ToolOptions& options = {});

enum class SetOp { intersect, unite };

std::string_view to_string(SetOp op);
SetOp parse_set_op(std::string_view text);

/// Left fold of intersection or union over `sets`; empty input gives {}.
DocIdSet set_combine(std::span<const DocIdSet> sets, SetOp op);

/// "label (value)" as rendered by extremum_tool.
std::string render_entry(const RankedEntry& entry);

}  // namespace globalrag
