#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>

// Prompt templates, placeholders written as {name}. Cassettes key on the
// rendered prompt, so any wording change also needs a new version tag.
namespace globalrag::prompts {

inline constexpr std::string_view kFilterVersion = "filter-v1";
inline constexpr std::string_view kFilterSystem =
    "You judge whether a document is relevant to a query. Begin your reply with "
    "\"yes\" or \"no\".";
inline constexpr std::string_view kFilterUser =
    "Does document {doc_id} contain information to answer query \"{query}\"?\n"
    "\n"
    "Document {doc_id}:\n"
    "{text}\n";

inline constexpr std::string_view kPlannerVersion = "planner-v1";
inline constexpr std::string_view kPlannerSystem =
    "You plan retrieval for questions that aggregate over many documents. Propose the next "
    "search query that targets aspects not yet covered. Reply with the query only, or DONE "
    "when further retrieval is unnecessary.";
inline constexpr std::string_view kPlannerUser =
    "Question: {query}\n"
    "Step: {step}\n"
    "Previous search queries:\n"
    "{history}"
    "Relevant documents found so far: {found}\n"
    "Next search query:";

inline constexpr std::string_view kClassifierVersion = "classifier-v1";
inline constexpr std::string_view kClassifierSystem =
    "Classify the aggregation a question asks for. Reply with exactly one word: count, "
    "minmax, sort, or topk.";
inline constexpr std::string_view kClassifierUser = "Question: {query}\nTask type:";

inline constexpr std::string_view kExtractorVersion = "extractor-v1";
inline constexpr std::string_view kExtractorSystem =
    "Extract a single numeric value from a document. Reply with the number only, or NONE if "
    "the document does not state it.";
inline constexpr std::string_view kExtractorUser =
    "Attribute: {attribute}\n"
    "Document {doc_id}:\n"
    "{text}\n"
    "Value:";

inline constexpr std::string_view kReaderVersion = "reader-v1";
inline constexpr std::string_view kReaderSystem =
    "Answer the question using only the provided documents. Reply with the answer only.";
inline constexpr std::string_view kReaderUser =
    "Documents:\n"
    "{context}\n"
    "Question: {query}\n"
    "Answer:";

inline constexpr std::string_view kReasonerVersion = "reasoner-v1";
inline constexpr std::string_view kReasonerSystem =
    "Answer the question step by step, one reasoning step per reply. If more evidence is "
    "needed, reply with the next search query prefixed by \"SEARCH:\". When you can answer, "
    "reply with the final answer prefixed by \"ANSWER:\".";
inline constexpr std::string_view kReasonerUser =
    "Documents:\n"
    "{context}\n"
    "Question: {query}\n"
    "Reasoning so far:\n"
    "{history}"
    "Next step:";

/// Replaces each {key} with its value; unknown placeholders are left as is.
inline std::string fill(std::string_view tmpl,
                        std::initializer_list<std::pair<std::string_view, std::string_view>> values) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        auto key = tmpl.substr(i + 1, close - i - 1);
        bool replaced = false;
        for (const auto& [k, v] : values) {
          if (k == key) {
            out += v;
            replaced = true;
            break;
          }
        }
        if (replaced) {
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

}  // namespace globalrag::prompts
