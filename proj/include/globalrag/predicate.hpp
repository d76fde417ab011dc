#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "globalrag/corpus.hpp"

namespace globalrag {

enum class CompareOp { eq, ne, lt, le, gt, ge, contains, contains_any, in };

std::string_view to_string(CompareOp op);

/// Throws PredicateError for an operator outside the closed set.
CompareOp parse_compare_op(std::string_view token);

/// A single attribute condition. The pseudo-attribute "domain" addresses
/// Document::domain. Missing attributes and type mismatches never match.
///
/// Operand types per operator:
///   eq, ne              number or string
///   lt, le, gt, ge      number
///   contains            string (list membership, or substring of a string)
///   contains_any        string list (list intersection)
///   in                  string list (string attribute is one of the values)
class Predicate {
public:
  Predicate() = default;
  /// Throws PredicateError when the operand type does not fit the operator.
  Predicate(std::string attribute, CompareOp op, AttributeValue operand);

  [[nodiscard]] bool matches(const Document& doc) const;

  [[nodiscard]] const std::string& attribute() const noexcept { return attribute_; }
  [[nodiscard]] CompareOp op() const noexcept { return op_; }
  [[nodiscard]] const AttributeValue& operand() const noexcept { return operand_; }

  bool operator==(const Predicate&) const = default;
  bool operator<(const Predicate& other) const;

private:
  std::string attribute_;
  CompareOp op_ = CompareOp::eq;
  AttributeValue operand_;
};

/// Parses `attr op value`, e.g. `years_experience >= 10`,
/// `domain == "Finance"`, `skills contains_any ["Go", "Rust"]`.
Predicate parse_predicate(std::string_view text);
std::string to_string(const Predicate& p);

nlohmann::json to_json(const Predicate& p);
Predicate predicate_from_json(const nlohmann::json& j);

/// Ids of every document matching `predicate`.
DocIdSet scan(const Corpus& corpus, const Predicate& predicate);

}  // namespace globalrag
