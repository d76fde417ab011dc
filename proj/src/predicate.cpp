#include "globalrag/predicate.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <tuple>
#include <utility>

#include "globalrag/errors.hpp"
#include "globalrag/jsonl.hpp"

namespace globalrag {

namespace {

constexpr std::array<std::pair<CompareOp, std::string_view>, 9> kOps{{
    {CompareOp::eq, "=="},
    {CompareOp::ne, "!="},
    {CompareOp::lt, "<"},
    {CompareOp::le, "<="},
    {CompareOp::gt, ">"},
    {CompareOp::ge, ">="},
    {CompareOp::contains, "contains"},
    {CompareOp::contains_any, "contains_any"},
    {CompareOp::in, "in"},
}};

bool is_ordering(CompareOp op) {
  return op == CompareOp::lt || op == CompareOp::le || op == CompareOp::gt || op == CompareOp::ge;
}

bool compare_numbers(double lhs, CompareOp op, double rhs) {
  switch (op) {
    case CompareOp::eq: return lhs == rhs;
    case CompareOp::ne: return lhs != rhs;
    case CompareOp::lt: return lhs < rhs;
    case CompareOp::le: return lhs <= rhs;
    case CompareOp::gt: return lhs > rhs;
    case CompareOp::ge: return lhs >= rhs;
    default: return false;
  }
}

bool contains(const StringList& list, const std::string& s) {
  return std::find(list.begin(), list.end(), s) != list.end();
}

bool match_string(const std::string& value, CompareOp op, const AttributeValue& operand) {
  switch (op) {
    case CompareOp::eq:
    case CompareOp::ne: {
      const auto* s = std::get_if<std::string>(&operand);
      if (!s) return false;
      return (value == *s) == (op == CompareOp::eq);
    }
    case CompareOp::contains: return value.find(std::get<std::string>(operand)) != std::string::npos;
    case CompareOp::in: return contains(std::get<StringList>(operand), value);
    default: return false;
  }
}

}  // namespace

std::string_view to_string(CompareOp op) {
  for (const auto& [o, token] : kOps) {
    if (o == op) return token;
  }
  return "?";
}

CompareOp parse_compare_op(std::string_view token) {
  for (const auto& [o, t] : kOps) {
    if (t == token) return o;
  }
  throw PredicateError("unknown comparison operator '" + std::string(token) + "'");
}

Predicate::Predicate(std::string attribute, CompareOp op, AttributeValue operand)
    : attribute_(std::move(attribute)), op_(op), operand_(std::move(operand)) {
  if (attribute_.empty()) throw PredicateError("predicate without attribute name");
  const bool number = std::holds_alternative<double>(operand_);
  const bool string = std::holds_alternative<std::string>(operand_);
  const bool list = std::holds_alternative<StringList>(operand_);
  bool ok = false;
  switch (op_) {
    case CompareOp::eq:
    case CompareOp::ne: ok = number || string; break;
    case CompareOp::lt:
    case CompareOp::le:
    case CompareOp::gt:
    case CompareOp::ge: ok = number; break;
    case CompareOp::contains: ok = string; break;
    case CompareOp::contains_any:
    case CompareOp::in: ok = list; break;
  }
  if (!ok) {
    throw PredicateError("operand type does not fit operator '" + std::string(to_string(op_)) +
                         "' on attribute '" + attribute_ + "'");
  }
}

bool Predicate::matches(const Document& doc) const {
  if (attribute_ == "domain") return match_string(doc.domain, op_, operand_);
  const AttributeValue* value = doc.attribute(attribute_);
  if (!value) return false;

  if (const auto* x = std::get_if<double>(value)) {
    const auto* rhs = std::get_if<double>(&operand_);
    return rhs && (is_ordering(op_) || op_ == CompareOp::eq || op_ == CompareOp::ne) &&
           compare_numbers(*x, op_, *rhs);
  }
  if (const auto* s = std::get_if<std::string>(value)) return match_string(*s, op_, operand_);

  const auto& list = std::get<StringList>(*value);
  if (op_ == CompareOp::contains) return contains(list, std::get<std::string>(operand_));
  if (op_ == CompareOp::contains_any) {
    const auto& wanted = std::get<StringList>(operand_);
    return std::any_of(wanted.begin(), wanted.end(),
                       [&](const std::string& w) { return contains(list, w); });
  }
  return false;
}

bool Predicate::operator<(const Predicate& other) const {
  return std::tie(attribute_, op_, operand_) < std::tie(other.attribute_, other.op_, other.operand_);
}

Predicate parse_predicate(std::string_view text) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  std::size_t i = 0;
  auto skip = [&] {
    while (i < text.size() && is_space(text[i])) ++i;
  };
  auto word = [&] {
    skip();
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    return text.substr(start, i - start);
  };
  std::string attribute(word());
  std::string_view op_token = word();
  skip();
  std::string_view rest = text.substr(i);
  if (attribute.empty() || op_token.empty() || rest.empty()) {
    throw PredicateError("expected '<attribute> <op> <value>' in '" + std::string(text) + "'");
  }
  CompareOp op = parse_compare_op(op_token);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(rest);
  } catch (const nlohmann::json::parse_error&) {
    throw PredicateError("cannot parse operand '" + std::string(rest) + "'");
  }
  AttributeValue operand;
  if (value.is_number()) {
    operand = value.get<double>();
  } else if (value.is_string()) {
    operand = value.get<std::string>();
  } else if (value.is_array() && std::all_of(value.begin(), value.end(),
                                             [](const auto& e) { return e.is_string(); })) {
    operand = value.get<StringList>();
  } else {
    throw PredicateError("unsupported operand '" + std::string(rest) + "'");
  }
  return Predicate(std::move(attribute), op, std::move(operand));
}

namespace {

nlohmann::json operand_json(const AttributeValue& v) {
  if (const auto* x = std::get_if<double>(&v)) return jsonl::number(*x);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return std::get<StringList>(v);
}

}  // namespace

std::string to_string(const Predicate& p) {
  return p.attribute() + " " + std::string(to_string(p.op())) + " " + operand_json(p.operand()).dump();
}

nlohmann::json to_json(const Predicate& p) {
  nlohmann::json j = nlohmann::json::object();
  j["attribute"] = p.attribute();
  j["op"] = std::string(to_string(p.op()));
  j["value"] = operand_json(p.operand());
  return j;
}

Predicate predicate_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("attribute") || !j.contains("op") || !j.contains("value")) {
    throw PredicateError("predicate object needs attribute, op and value");
  }
  const auto& v = j.at("value");
  AttributeValue operand;
  if (v.is_number()) {
    operand = v.get<double>();
  } else if (v.is_string()) {
    operand = v.get<std::string>();
  } else if (v.is_array()) {
    operand = v.get<StringList>();
  } else {
    throw PredicateError("unsupported predicate value " + v.dump());
  }
  return Predicate(j.at("attribute").get<std::string>(),
                   parse_compare_op(j.at("op").get<std::string>()), std::move(operand));
}

DocIdSet scan(const Corpus& corpus, const Predicate& predicate) {
  DocIdSet out;
  for (const auto& doc : corpus) {
    if (predicate.matches(doc)) out.insert(doc.id);
  }
  return out;
}

}  // namespace globalrag
