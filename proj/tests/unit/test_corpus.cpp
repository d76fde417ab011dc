#include <gtest/gtest.h>

#include <sstream>

#include "globalrag/corpus.hpp"
#include "globalrag/errors.hpp"
#include "globalrag/generator.hpp"
#include "globalrag/predicate.hpp"

using namespace globalrag;

namespace {

Document resume(std::string id, std::string domain, double years, StringList skills) {
  Document d;
  d.id = std::move(id);
  d.domain = std::move(domain);
  d.text = d.id + " resume";
  d.attributes.emplace("years_experience", years);
  d.attributes.emplace("skills", std::move(skills));
  d.attributes.emplace("location", std::string("Denver"));
  return d;
}

}  // namespace

TEST(Corpus, IngestRoundTripsThroughJsonl) {
  const Corpus original = generate_corpus(3, 40, 5);
  std::istringstream in(corpus_to_jsonl(original));
  EXPECT_EQ(parse_corpus_jsonl(in), original);
}

TEST(Corpus, DuplicateIdIsRejectedByName) {
  Corpus c;
  c.add(resume("d1", "Finance", 3, {}));
  try {
    c.add(resume("d1", "Legal", 4, {}));
    FAIL() << "duplicate accepted";
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find("d1"), std::string::npos);
  }
}

TEST(Corpus, RejectsEmptyTextAndNonFiniteNumbers) {
  Corpus c;
  Document d = resume("d1", "Finance", 3, {});
  d.text.clear();
  EXPECT_THROW(c.add(d), IngestionError);
  Document n = resume("d2", "Finance", std::nan(""), {});
  EXPECT_THROW(c.add(n), IngestionError);
}

TEST(Corpus, MalformedLineReportsLineNumber) {
  std::istringstream in(
      "{\"id\":\"a\",\"domain\":\"x\",\"text\":\"t\",\"attributes\":{}}\n\n{not json}\n");
  try {
    parse_corpus_jsonl(in);
    FAIL() << "bad line accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Corpus, RejectsNestedObjectAttribute) {
  std::istringstream in(
      "{\"id\":\"a\",\"domain\":\"x\",\"text\":\"t\",\"attributes\":{\"k\":{\"n\":1}}}\n");
  EXPECT_THROW(parse_corpus_jsonl(in), ParseError);
}

TEST(Corpus, GeneratedDocumentsRenderEveryAttribute) {
  const Corpus c = generate_corpus(11, 300, 23);
  for (const auto& d : c) EXPECT_TRUE(attributes_rendered(d)) << d.id;
}

TEST(Corpus, FormatNumberDropsIntegralFraction) {
  EXPECT_EQ(format_number(12.0), "12");
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(-3.5), "-3.5");
  EXPECT_EQ(format_number(0.1), "0.1");
}

TEST(Predicate, ParsesAndMatches) {
  const Document d = resume("d1", "Finance", 12, {"SQL", "Excel"});
  EXPECT_TRUE(parse_predicate("years_experience >= 10").matches(d));
  EXPECT_FALSE(parse_predicate("years_experience < 12").matches(d));
  EXPECT_TRUE(parse_predicate("domain == \"Finance\"").matches(d));
  EXPECT_TRUE(parse_predicate("skills contains \"SQL\"").matches(d));
  EXPECT_FALSE(parse_predicate("skills contains \"Go\"").matches(d));
  EXPECT_TRUE(parse_predicate("skills contains_any [\"Go\", \"Excel\"]").matches(d));
  EXPECT_TRUE(parse_predicate("location in [\"Denver\", \"Austin\"]").matches(d));
  EXPECT_TRUE(parse_predicate("location contains \"Den\"").matches(d));
}

TEST(Predicate, MissingAttributeAndTypeMismatchNeverMatch) {
  const Document d = resume("d1", "Finance", 12, {});
  EXPECT_FALSE(parse_predicate("salary > 1").matches(d));
  EXPECT_FALSE(parse_predicate("location == 3").matches(d));
  EXPECT_FALSE(parse_predicate("location != 3").matches(d));
}

TEST(Predicate, RejectsUnknownOperatorAndBadOperand) {
  EXPECT_THROW(parse_predicate("years_experience ~= 3"), PredicateError);
  EXPECT_THROW(parse_predicate("years_experience >= \"ten\""), PredicateError);
  EXPECT_THROW(Predicate("skills", CompareOp::contains_any, std::string("Go")), PredicateError);
}

TEST(Predicate, JsonRoundTrip) {
  const auto p = parse_predicate("skills contains_any [\"Go\", \"Rust\"]");
  EXPECT_EQ(predicate_from_json(to_json(p)), p);
  EXPECT_EQ(parse_predicate(to_string(p)), p);
}

TEST(Predicate, ScanMatchesLinearFilter) {
  const Corpus c = generate_corpus(5, 200, 6);
  const auto p = parse_predicate("years_experience >= 20");
  DocIdSet expected;
  for (const auto& d : c) {
    if (std::get<double>(*d.attribute("years_experience")) >= 20) expected.insert(d.id);
  }
  EXPECT_EQ(scan(c, p), expected);
}
