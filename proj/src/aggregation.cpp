#include "globalrag/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>

#include "globalrag/errors.hpp"

namespace globalrag {

std::string_view to_string(AggregationKind kind) {
  switch (kind) {
    case AggregationKind::count: return "count";
    case AggregationKind::min: return "min";
    case AggregationKind::max: return "max";
    case AggregationKind::sort: return "sort";
    case AggregationKind::topk: return "topk";
  }
  return "?";
}

std::string_view to_string(Direction direction) {
  return direction == Direction::asc ? "asc" : "desc";
}

Direction parse_direction(std::string_view text) {
  if (text == "asc") return Direction::asc;
  if (text == "desc") return Direction::desc;
  throw InputError("unknown direction '" + std::string(text) + "'");
}

std::string_view to_string(SetOp op) { return op == SetOp::intersect ? "intersection" : "union"; }

SetOp parse_set_op(std::string_view text) {
  if (text == "intersection") return SetOp::intersect;
  if (text == "union") return SetOp::unite;
  throw InputError("unknown set operation '" + std::string(text) + "'");
}

namespace {

/// Strict weak order for a ranking direction; equal values fall back to id.
struct RankOrder {
  Direction direction;
  bool operator()(const RankedEntry& a, const RankedEntry& b) const {
    if (a.value != b.value) return direction == Direction::desc ? a.value > b.value : a.value < b.value;
    return a.entity_id < b.entity_id;
  }
};

/// Validates records and collapses them to one entry per entity, ordered by id.
std::vector<RankedEntry> numeric_entries(std::span<const AttributeRecord> records,
                                         const ToolOptions& options) {
  if (records.empty()) throw EmptyInputError("aggregation over zero records");
  const std::string& unit = records.front().unit;
  std::map<DocId, RankedEntry> by_entity;
  for (const auto& r : records) {
    const auto* value = std::get_if<double>(&r.value);
    if (!value) {
      throw ValueTypeError("record for '" + r.entity_id + "' has a non-numeric value");
    }
    if (!std::isfinite(*value)) {
      throw ValueTypeError("record for '" + r.entity_id + "' has a non-finite value");
    }
    if (r.unit != unit) {
      throw UnitError("mixed units '" + unit + "' and '" + r.unit + "'");
    }
    auto [it, inserted] = by_entity.try_emplace(r.entity_id, RankedEntry{r.entity_id, r.entity_label, *value});
    if (inserted) continue;
    RankedEntry& cur = it->second;
    bool replace = false;
    switch (options.duplicates) {
      case DuplicatePolicy::keep_max: replace = *value > cur.value; break;
      case DuplicatePolicy::keep_min: replace = *value < cur.value; break;
      case DuplicatePolicy::keep_first: break;
    }
    if (replace) cur = RankedEntry{r.entity_id, r.entity_label, *value};
  }
  std::vector<RankedEntry> out;
  out.reserve(by_entity.size());
  for (auto& [id, entry] : by_entity) out.push_back(std::move(entry));
  return out;
}

std::string join_labels(const std::vector<RankedEntry>& ranked) {
  std::string out;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (i) out += ", ";
    out += ranked[i].label;
  }
  return out;
}

}  // namespace

std::string render_entry(const RankedEntry& entry) {
  return entry.label + " (" + format_number(entry.value) + ")";
}

AggregationResult count_tool(std::span<const AttributeRecord> records) {
  std::set<std::string_view> ids;
  for (const auto& r : records) ids.insert(r.entity_id);
  AggregationResult result;
  result.kind = AggregationKind::count;
  result.count_value = ids.size();
  result.answer_text = std::to_string(ids.size());
  return result;
}

AggregationResult extremum_tool(std::span<const AttributeRecord> records, Extremum which,
                                const ToolOptions& options) {
  auto entries = numeric_entries(records, options);
  // Entries are id-ordered, so keeping the first strictly better value gives
  // the smallest id among ties.
  const RankedEntry* best = &entries.front();
  for (const auto& e : entries) {
    if (which == Extremum::max ? e.value > best->value : e.value < best->value) best = &e;
  }
  AggregationResult result;
  result.kind = which == Extremum::max ? AggregationKind::max : AggregationKind::min;
  result.ranked = std::vector<RankedEntry>{*best};
  result.answer_text = render_entry(*best);
  return result;
}

AggregationResult sort_tool(std::span<const AttributeRecord> records, Direction direction,
                            const ToolOptions& options) {
  auto entries = numeric_entries(records, options);
  std::sort(entries.begin(), entries.end(), RankOrder{direction});
  AggregationResult result;
  result.kind = AggregationKind::sort;
  result.answer_text = join_labels(entries);
  result.ranked = std::move(entries);
  return result;
}

AggregationResult topk_tool(std::span<const AttributeRecord> records, std::size_t k,
                            Direction direction, const ToolOptions& options) {
  if (k == 0) throw InputError("top-k needs k >= 1");
  auto entries = numeric_entries(records, options);
  RankOrder order{direction};
  // top() is the weakest of the k best seen so far; anything that does not
  // beat it is pruned without touching the heap.
  std::priority_queue<RankedEntry, std::vector<RankedEntry>, RankOrder> heap(order);
  for (auto& e : entries) {
    if (heap.size() < k) {
      heap.push(std::move(e));
    } else if (order(e, heap.top())) {
      heap.pop();
      heap.push(std::move(e));
    }
  }
  std::vector<RankedEntry> ranked;
  ranked.reserve(heap.size());
  while (!heap.empty()) {
    ranked.push_back(heap.top());
    heap.pop();
  }
  std::reverse(ranked.begin(), ranked.end());
  AggregationResult result;
  result.kind = AggregationKind::topk;
  result.answer_text = join_labels(ranked);
  result.ranked = std::move(ranked);
  return result;
}

DocIdSet set_combine(std::span<const DocIdSet> sets, SetOp op) {
  if (sets.empty()) return {};
  DocIdSet acc = sets.front();
  for (std::size_t i = 1; i < sets.size(); ++i) {
    DocIdSet next;
    if (op == SetOp::intersect) {
      std::set_intersection(acc.begin(), acc.end(), sets[i].begin(), sets[i].end(),
                            std::inserter(next, next.end()));
    } else {
      std::set_union(acc.begin(), acc.end(), sets[i].begin(), sets[i].end(),
                     std::inserter(next, next.end()));
    }
    acc = std::move(next);
  }
  return acc;
}

}  // namespace globalrag
