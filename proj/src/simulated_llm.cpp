#include "globalrag/simulated_llm.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <string>

#include "globalrag/prompts.hpp"
#include "globalrag/question_templates.hpp"

namespace globalrag {

namespace {

struct Knowledge {
  const Corpus& corpus;
  std::map<std::string, QueryRecord> by_question;
  SimulatedLlmOptions options;

  const QueryRecord* record(const std::string& question) const {
    auto it = by_question.find(question);
    return it == by_question.end() ? nullptr : &it->second;
  }
};

/// Text between `open` and the next `close` after it.
std::optional<std::string> between(const std::string& s, std::string_view open,
                                   std::string_view close, std::size_t from = 0) {
  const auto b = s.find(open, from);
  if (b == std::string::npos) return std::nullopt;
  const auto start = b + open.size();
  const auto e = s.find(close, start);
  if (e == std::string::npos) return std::nullopt;
  return s.substr(start, e - start);
}

std::vector<const Document*> context_docs(const Knowledge& k, const std::string& prompt) {
  static const std::regex doc_re(R"((?:^|\n)Document ([^\s:]+):\n)");
  std::vector<const Document*> out;
  const auto end = prompt.rfind("\nQuestion: ");
  const std::string context = prompt.substr(0, end == std::string::npos ? prompt.size() : end);
  for (std::sregex_iterator it(context.begin(), context.end(), doc_re), stop; it != stop; ++it) {
    if (const Document* d = k.corpus.find((*it)[1].str())) out.push_back(d);
  }
  return out;
}

std::string read_answer(const Knowledge& k, const std::string& question,
                        std::span<const Document* const> docs) {
  TaskPlan plan;
  if (auto m = match_question(question)) {
    plan = m->plan;
  } else if (const QueryRecord* r = k.record(question); r && r->trajectory) {
    plan = r->trajectory->task;
  } else {
    return std::to_string(docs.size());
  }
  if (docs.empty()) return std::string("no matching documents");
  try {
    const auto records = plan.task == TaskType::count ? entity_records(docs)
                                                      : structured_records(docs, plan.attribute);
    return apply_task(plan, records).answer_text;
  } catch (const std::exception&) {
    return std::string("no matching documents");
  }
}

std::optional<std::string> step_clause(const Knowledge& k, const std::string& question,
                                       std::size_t index) {
  const QueryRecord* r = k.record(question);
  if (!r || !r->trajectory || index >= r->trajectory->steps.size()) return std::nullopt;
  return "candidates who " + r->trajectory->steps[index].query_text;
}

}  // namespace

std::shared_ptr<MockChatBackend> make_simulated_backend(const Corpus& corpus,
                                                        std::span<const QueryRecord> dataset,
                                                        SimulatedLlmOptions options) {
  auto k = std::make_shared<Knowledge>(Knowledge{corpus, {}, options});
  for (const auto& r : dataset) k->by_question.emplace(r.question, r);
  auto backend = std::make_shared<MockChatBackend>("simulated");

  backend->add_responder([k](const ChatRequest& req) -> std::optional<std::string> {
    const std::string& u = req.user_prompt;
    const std::string_view sys = req.system_prompt;

    if (sys == prompts::kFilterSystem) {
      const auto doc_id = between(u, "Does document ", " contain");
      const auto q_start = u.find("answer query \"");
      const auto q_end = u.find("\"?\n");
      if (!doc_id || q_start == std::string::npos || q_end == std::string::npos) return "no";
      const std::string question = u.substr(q_start + 14, q_end - q_start - 14);
      const QueryRecord* r = k->record(question);
      return r && r->gold_doc_ids.contains(*doc_id) ? "yes" : "no";
    }

    if (sys == prompts::kPlannerSystem) {
      const auto question = between(u, "Question: ", "\nStep: ");
      const auto step = between(u, "\nStep: ", "\n");
      if (!question || !step || k->options.planner == PlannerMode::done) return "DONE";
      const auto clause = step_clause(*k, *question, std::stoul(*step) - 1);
      return clause ? *clause : std::string("DONE");
    }

    if (sys == prompts::kClassifierSystem) {
      const auto question = between(u, "Question: ", "\nTask type:");
      if (!question) return std::nullopt;
      if (const QueryRecord* r = k->record(*question)) return std::string(to_string(r->task));
      if (auto m = match_question(*question)) return std::string(to_string(m->plan.task));
      return std::nullopt;
    }

    if (sys == prompts::kExtractorSystem) {
      const auto attribute = between(u, "Attribute: ", "\n");
      const auto doc_id = between(u, "\nDocument ", ":\n");
      if (!attribute || !doc_id) return std::nullopt;
      const auto* spec = find_numeric_attribute(*attribute);
      const Document* d = k->corpus.find(*doc_id);
      if (!spec || !d) return std::string("NONE");
      std::smatch m;
      const std::regex re{std::string(spec->text_pattern)};
      return std::regex_search(d->text, m, re) ? m[1].str() : std::string("NONE");
    }

    if (sys == prompts::kReaderSystem) {
      const auto q_pos = u.rfind("\nQuestion: ");
      if (q_pos == std::string::npos) return std::nullopt;
      const auto question = between(u, "\nQuestion: ", "\nAnswer:", q_pos);
      if (!question) return std::nullopt;
      return read_answer(*k, *question, context_docs(*k, u));
    }

    if (sys == prompts::kReasonerSystem) {
      const auto q_pos = u.rfind("\nQuestion: ");
      if (q_pos == std::string::npos) return std::nullopt;
      const auto question = between(u, "\nQuestion: ", "\nReasoning so far:\n", q_pos);
      const auto history = between(u, "\nReasoning so far:\n", "Next step:", q_pos);
      if (!question || !history) return std::nullopt;
      const auto done = static_cast<std::size_t>(std::count(history->begin(), history->end(), '\n'));
      if (auto clause = step_clause(*k, *question, done)) return "SEARCH: " + *clause;
      return "ANSWER: " + read_answer(*k, *question, context_docs(*k, u));
    }
    return std::nullopt;
  });
  return backend;
}

}  // namespace globalrag
