#include "globalrag/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <fstream>
#include <regex>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "globalrag/errors.hpp"
#include "globalrag/jsonl.hpp"
#include "globalrag/prompts.hpp"
#include "globalrag/question_templates.hpp"

namespace globalrag {

using json = nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool has_word(const std::string& text, const std::regex& re) { return std::regex_search(text, re); }

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::globalrag: return "globalrag";
    case Strategy::standard_rag: return "standard_rag";
    case Strategy::iterative: return "iterative";
  }
  return "?";
}

Strategy parse_strategy(std::string_view text) {
  if (text == "globalrag") return Strategy::globalrag;
  if (text == "standard_rag" || text == "standard") return Strategy::standard_rag;
  if (text == "iterative" || text == "ircot") return Strategy::iterative;
  throw InputError("unknown strategy '" + std::string(text) + "'");
}

std::string_view to_string(ExtractionMode m) {
  switch (m) {
    case ExtractionMode::structured: return "structured";
    case ExtractionMode::llm: return "llm";
    case ExtractionMode::text_pattern: return "text_pattern";
  }
  return "?";
}

ExtractionMode parse_extraction_mode(std::string_view text) {
  if (text == "structured") return ExtractionMode::structured;
  if (text == "llm") return ExtractionMode::llm;
  if (text == "text_pattern" || text == "regex") return ExtractionMode::text_pattern;
  throw InputError("unknown extraction mode '" + std::string(text) + "'");
}

void PipelineConfig::validate() const {
  if (max_iterations == 0) throw InputError("max_iterations must be at least 1");
  if (retrieve_k == 0) throw InputError("retrieve_k must be at least 1");
  if (filter_parallelism == 0) throw InputError("filter parallelism must be at least 1");
}

json to_json(const PipelineConfig& c) {
  return json{{"max_iterations", c.max_iterations},
              {"retrieve_k", c.retrieve_k},
              {"prefilter_min_score", c.prefilter_min_score},
              {"strategy", to_string(c.strategy)},
              {"extraction", to_string(c.extraction)}};
}

// ---------------------------------------------------------------------------
// Retrievers

DenseRetriever::DenseRetriever(const VectorIndex& index, Embedder& embedder)
    : index_(index), embedder_(embedder) {}

std::vector<RetrievalHit> DenseRetriever::retrieve(const std::string& query, std::size_t k) const {
  return globalrag::retrieve(index_, query, embedder_, k);
}

FixedRetriever::FixedRetriever(std::map<std::string, std::vector<DocId>> lists)
    : lists_(std::move(lists)) {}

std::vector<RetrievalHit> FixedRetriever::retrieve(const std::string& query, std::size_t) const {
  std::vector<RetrievalHit> out;
  if (auto it = lists_.find(query); it != lists_.end()) {
    for (const auto& id : it->second) out.push_back(RetrievalHit{id, 1.0});
  }
  return out;
}

FixedRetriever gold_retriever(std::span<const QueryRecord> records) {
  std::map<std::string, std::vector<DocId>> lists;
  for (const auto& r : records) {
    lists[r.question] = std::vector<DocId>(r.gold_doc_ids.begin(), r.gold_doc_ids.end());
  }
  return FixedRetriever(std::move(lists));
}

// ---------------------------------------------------------------------------
// Trace serialization

namespace {

json value_json(const RecordValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return jsonl::number(*d);
  return std::get<std::string>(v);
}

json ranked_json(const RankedEntry& e) {
  return json{{"id", e.entity_id}, {"label", e.label}, {"value", jsonl::number(e.value)}};
}

json plan_json(const TaskPlan& p) {
  json j{{"task", to_string(p.task)}};
  if (p.task != TaskType::count) {
    j["attribute"] = p.attribute;
    j["direction"] = to_string(p.direction);
  }
  if (p.task == TaskType::topk) j["k"] = p.k;
  return j;
}

AggregationKind parse_kind(std::string_view s) {
  for (auto k : {AggregationKind::count, AggregationKind::min, AggregationKind::max,
                 AggregationKind::sort, AggregationKind::topk}) {
    if (to_string(k) == s) return k;
  }
  throw InputError("unknown aggregation kind '" + std::string(s) + "'");
}

}  // namespace

json to_json(const AggregationResult& r) {
  json j{{"kind", to_string(r.kind)}, {"answer_text", r.answer_text}};
  if (r.count_value) j["count"] = *r.count_value;
  if (r.ranked) {
    json ranked = json::array();
    for (const auto& e : *r.ranked) ranked.push_back(ranked_json(e));
    j["ranked"] = std::move(ranked);
  }
  return j;
}

json to_json(const RunTrace& t) {
  json iterations = json::array();
  for (const auto& it : t.iterations) {
    iterations.push_back(json{{"subquery", it.subquery},
                              {"hit_ids", it.hit_ids},
                              {"surviving_ids", it.surviving_ids}});
  }
  json extracted = json::array();
  for (const auto& r : t.extracted) {
    extracted.push_back(json{{"entity_id", r.entity_id},
                             {"label", r.entity_label},
                             {"attribute", r.attribute},
                             {"value", value_json(r.value)},
                             {"unit", r.unit}});
  }
  return json{{"query_id", t.query_id},
              {"query", t.query},
              {"strategy", to_string(t.strategy)},
              {"task", t.task ? json(to_string(*t.task)) : json(nullptr)},
              {"plan", t.plan ? plan_json(*t.plan) : json(nullptr)},
              {"iterations", iterations},
              {"extracted", extracted},
              {"result", t.result ? to_json(*t.result) : json(nullptr)},
              {"retrieved_ids_at_k", t.retrieved_ids_at_k},
              {"answer_text", t.answer_text},
              {"errors", t.errors}};
}

RunTrace trace_from_json(const json& j, std::size_t line) {
  try {
    RunTrace t;
    t.query_id = j.at("query_id").get<std::string>();
    t.query = j.value("query", std::string());
    if (j.contains("strategy")) t.strategy = parse_strategy(j.at("strategy").get<std::string>());
    if (j.contains("task") && !j.at("task").is_null()) {
      t.task = parse_task_type(j.at("task").get<std::string>());
    }
    if (j.contains("plan") && !j.at("plan").is_null()) {
      const auto& p = j.at("plan");
      TaskPlan plan;
      plan.task = parse_task_type(p.at("task").get<std::string>());
      plan.attribute = p.value("attribute", std::string());
      if (p.contains("direction")) plan.direction = parse_direction(p.at("direction").get<std::string>());
      plan.k = p.value("k", std::size_t{0});
      t.plan = plan;
    }
    for (const auto& it : j.value("iterations", json::array())) {
      t.iterations.push_back(IterationTrace{it.at("subquery").get<std::string>(),
                                            it.at("hit_ids").get<std::vector<DocId>>(),
                                            it.at("surviving_ids").get<std::vector<DocId>>()});
    }
    for (const auto& r : j.value("extracted", json::array())) {
      AttributeRecord rec;
      rec.entity_id = r.at("entity_id").get<std::string>();
      rec.entity_label = r.value("label", std::string());
      rec.attribute = r.value("attribute", std::string());
      const auto& v = r.at("value");
      rec.value = v.is_number() ? RecordValue(v.get<double>()) : RecordValue(v.get<std::string>());
      rec.unit = r.value("unit", std::string());
      t.extracted.push_back(std::move(rec));
    }
    if (j.contains("result") && !j.at("result").is_null()) {
      const auto& r = j.at("result");
      AggregationResult res;
      res.kind = parse_kind(r.at("kind").get<std::string>());
      res.answer_text = r.value("answer_text", std::string());
      if (r.contains("count")) res.count_value = r.at("count").get<std::size_t>();
      if (r.contains("ranked")) {
        std::vector<RankedEntry> ranked;
        for (const auto& e : r.at("ranked")) {
          ranked.push_back(RankedEntry{e.at("id").get<std::string>(),
                                       e.value("label", std::string()),
                                       e.at("value").get<double>()});
        }
        res.ranked = std::move(ranked);
      }
      t.result = std::move(res);
    }
    t.retrieved_ids_at_k = j.value("retrieved_ids_at_k", std::vector<DocId>{});
    t.answer_text = j.value("answer_text", std::string());
    t.errors = j.value("errors", std::vector<std::string>{});
    return t;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(line, std::string("bad trace: ") + e.what());
  }
}

std::string traces_to_jsonl(std::span<const RunTrace> traces) {
  std::string out;
  for (const auto& t : traces) {
    out += to_json(t).dump();
    out += '\n';
  }
  return out;
}

std::vector<RunTrace> parse_traces_jsonl(std::istream& in) {
  std::vector<RunTrace> out;
  jsonl::for_each_line(in, [&](std::size_t line, const json& j) {
    out.push_back(trace_from_json(j, line));
  });
  return out;
}

std::vector<RunTrace> load_traces(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open traces " + path.string());
  return parse_traces_jsonl(in);
}

// ---------------------------------------------------------------------------
// Classification and planning

namespace {

std::optional<TaskType> keyword_task(const std::string& q) {
  static const std::regex count_re(R"(^(how many|count the)\b|\bnumber of\b)");
  static const std::regex topk_re(R"(\b(top|bottom)[ -]?\d+\b|\b(top|bottom|the|first|last) \d+ \w+)");
  static const std::regex sort_re(R"(\b(rank|ranked|sort|sorted|order|ordered)\b)");
  static const std::regex minmax_re(
      R"(\b(most|least|fewest|highest|lowest|largest|smallest|maximum|minimum|greatest)\b)");
  if (has_word(q, count_re)) return TaskType::count;
  if (has_word(q, topk_re)) return TaskType::topk;
  if (has_word(q, sort_re)) return TaskType::sort;
  if (has_word(q, minmax_re)) return TaskType::minmax;
  return std::nullopt;
}

TaskType llm_task(std::string_view query, LlmGateway& gateway) {
  const std::string reply =
      gateway.ask(std::string(prompts::kClassifierSystem),
                  prompts::fill(prompts::kClassifierUser, {{"query", query}}), 8);
  std::string word;
  for (char c : trim(reply)) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '.' || c == ',') break;
    word.push_back(c);
  }
  try {
    return parse_task_type(word);
  } catch (const InputError&) {
    throw ClassificationError("unparseable task label '" + trim(reply) + "'");
  }
}

}  // namespace

TaskType classify_task(std::string_view query, LlmGateway* gateway) {
  if (trim(query).empty()) throw ClassificationError("empty query");
  if (auto m = match_question(query)) return m->plan.task;
  if (auto t = keyword_task(lower(query))) return *t;
  if (!gateway) throw ClassificationError("no rule matches and no LLM fallback is configured");
  return llm_task(query, *gateway);
}

TaskPlan plan_task(std::string_view query, LlmGateway* gateway) {
  if (auto m = match_question(query)) return m->plan;
  TaskPlan plan;
  plan.task = classify_task(query, gateway);
  if (plan.task == TaskType::count) return plan;
  const std::string q = lower(query);

  std::size_t best = std::string::npos;
  for (const auto& a : kNumericAttributes) {
    for (std::string_view cue : {a.noun, a.unit}) {
      const auto pos = q.find(std::string(cue.substr(0, cue.size() - 1)));  // singular prefix
      if (pos != std::string::npos && pos < best) {
        best = pos;
        plan.attribute = std::string(a.name);
      }
    }
  }
  if (plan.attribute.empty()) plan.attribute = std::string(kNumericAttributes.front().name);

  static const std::regex dir_re(
      R"(\b(most|highest|top|descending|largest|greatest|maximum|least|fewest|lowest|bottom|ascending|smallest|minimum)\b)");
  std::smatch m;
  if (std::regex_search(q, m, dir_re)) {
    static const std::set<std::string> asc{"least",     "fewest",   "lowest", "bottom",
                                           "ascending", "smallest", "minimum"};
    plan.direction = asc.contains(m[1].str()) ? Direction::asc : Direction::desc;
  }
  if (plan.task == TaskType::topk) {
    static const std::regex k_re(R"((\d+))");
    plan.k = std::regex_search(q, m, k_re) ? std::stoul(m[1].str()) : 5;
    if (plan.k == 0) plan.k = 5;
  }
  return plan;
}

std::optional<std::string> plan_subqueries(const std::string& query, std::size_t step,
                                           const RunTrace& prior, LlmGateway& gateway) {
  if (step == 0) return query;
  std::string history;
  std::set<DocId> found;
  for (const auto& it : prior.iterations) {
    history += "- " + it.subquery + "\n";
    found.insert(it.surviving_ids.begin(), it.surviving_ids.end());
  }
  const std::string step_text = std::to_string(step);
  const std::string found_text = std::to_string(found.size());
  const std::string reply = trim(gateway.ask(
      std::string(prompts::kPlannerSystem),
      prompts::fill(prompts::kPlannerUser, {{"query", query},
                                            {"step", step_text},
                                            {"history", history},
                                            {"found", found_text}}),
      64));
  if (reply.empty() || lower(reply).starts_with("done")) return std::nullopt;
  return reply;
}

std::optional<double> parse_first_number(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    const bool digit = std::isdigit(static_cast<unsigned char>(text[i])) != 0;
    const bool signed_digit = text[i] == '-' && i + 1 < text.size() &&
                              std::isdigit(static_cast<unsigned char>(text[i + 1]));
    if (!digit && !signed_digit) continue;
    std::size_t end = i + 1;
    while (end < text.size() && (std::isdigit(static_cast<unsigned char>(text[end])) ||
                                 text[end] == '.' || text[end] == ',')) {
      ++end;
    }
    std::string num;
    for (std::size_t p = i; p < end; ++p) {
      if (text[p] != ',') num.push_back(text[p]);
    }
    while (!num.empty() && num.back() == '.') num.pop_back();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
    if (ec == std::errc()) return v;
    i = end;
  }
  return std::nullopt;
}

std::vector<AttributeRecord> extract_records(std::span<const Document* const> docs,
                                             const std::string& attribute, ExtractionMode mode,
                                             LlmGateway* gateway,
                                             std::vector<std::string>& errors) {
  if (mode == ExtractionMode::structured) return structured_records(docs, attribute);
  const std::string unit = unit_for(attribute);
  std::vector<AttributeRecord> out;
  if (mode == ExtractionMode::text_pattern) {
    const auto* spec = find_numeric_attribute(attribute);
    if (!spec) {
      errors.push_back("extraction: no text pattern for attribute '" + attribute + "'");
      return out;
    }
    const std::regex re{std::string(spec->text_pattern)};
    for (const Document* d : docs) {
      std::smatch m;
      if (std::regex_search(d->text, m, re)) {
        out.push_back(AttributeRecord{d->id, d->label(), attribute, std::stod(m[1].str()), unit});
      } else {
        errors.push_back("extraction: no " + attribute + " in " + d->id);
      }
    }
    return out;
  }
  if (!gateway) {
    errors.push_back("extraction: LLM mode without a gateway");
    return out;
  }
  for (const Document* d : docs) {
    std::string reply;
    try {
      reply = gateway->ask(std::string(prompts::kExtractorSystem),
                           prompts::fill(prompts::kExtractorUser,
                                         {{"attribute", attribute}, {"doc_id", d->id}, {"text", d->text}}),
                           16);
    } catch (const std::exception& e) {
      errors.push_back("extraction: gateway failure at " + d->id + ": " + e.what());
      break;
    }
    const auto value = lower(trim(reply)).starts_with("none") ? std::nullopt : parse_first_number(reply);
    if (!value) {
      spdlog::debug("extraction: unparseable value for {}: '{}'", d->id, reply);
      errors.push_back("extraction: unparseable value for " + d->id);
      continue;
    }
    out.push_back(AttributeRecord{d->id, d->label(), attribute, *value, unit});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline

Pipeline::Pipeline(const Corpus& corpus, const Retriever& retriever, LlmGateway& reader,
                   LlmGateway& filter, PipelineConfig config)
    : corpus_(corpus),
      retriever_(retriever),
      reader_(reader),
      filter_(filter, config.filter_parallelism),
      config_(config) {
  config_.validate();
}

RunTrace Pipeline::run(const std::string& query_id, const std::string& query) {
  return config_.strategy == Strategy::globalrag ? run_globalrag(query_id, query)
                                                 : run_baseline(query_id, query);
}

RunTrace Pipeline::run_globalrag(const std::string& query_id, const std::string& query) {
  RunTrace trace;
  trace.query_id = query_id;
  trace.query = query;
  trace.strategy = Strategy::globalrag;
  try {
    trace.plan = plan_task(query, &reader_);
    trace.task = trace.plan->task;
  } catch (const std::exception& e) {
    trace.errors.push_back(std::string("classification: ") + e.what());
    return trace;
  }

  std::vector<DocId> survivors;
  std::set<DocId> survivor_set;
  std::set<std::string> asked;
  for (std::size_t step = 0; step < config_.max_iterations; ++step) {
    std::optional<std::string> subquery;
    try {
      subquery = plan_subqueries(query, step, trace, reader_);
    } catch (const std::exception& e) {
      trace.errors.push_back(std::string("planning: ") + e.what());
      break;
    }
    if (!subquery || !asked.insert(*subquery).second) break;

    IterationTrace iter;
    iter.subquery = *subquery;
    std::vector<RetrievalHit> hits;
    try {
      hits = retriever_.retrieve(*subquery, config_.retrieve_k);
    } catch (const std::exception& e) {
      trace.errors.push_back(std::string("retrieval: ") + e.what());
      trace.iterations.push_back(std::move(iter));
      break;
    }
    for (const auto& h : hits) iter.hit_ids.push_back(h.doc_id);

    std::vector<const Document*> docs;
    for (const auto& h : prefilter(hits, config_.prefilter_min_score)) {
      if (const Document* d = corpus_.find(h.doc_id)) docs.push_back(d);
    }
    std::vector<FilterVerdict> verdicts;
    bool failed = false;
    try {
      verdicts = filter_.judge(query, docs);
    } catch (const FilterError& e) {
      verdicts = e.partial();
      trace.errors.push_back(std::string("filter: ") + e.what());
      failed = true;
    }
    for (const auto& v : verdicts) {
      if (!v.relevant) continue;
      iter.surviving_ids.push_back(v.doc_id);
      if (survivor_set.insert(v.doc_id).second) survivors.push_back(v.doc_id);
    }
    trace.iterations.push_back(std::move(iter));
    if (failed) break;
  }
  trace.retrieved_ids_at_k = survivors;

  const TaskPlan& plan = *trace.plan;
  auto no_match = [&] {
    AggregationResult r;
    if (plan.task == TaskType::count) {
      r.kind = AggregationKind::count;
      r.count_value = 0;
    } else {
      r.kind = plan.task == TaskType::minmax
                   ? (plan.direction == Direction::desc ? AggregationKind::max : AggregationKind::min)
                   : (plan.task == TaskType::sort ? AggregationKind::sort : AggregationKind::topk);
      r.ranked = std::vector<RankedEntry>{};
    }
    r.answer_text = std::string(kNoMatchAnswer);
    trace.answer_text = r.answer_text;
    trace.result = std::move(r);
  };
  if (survivors.empty()) {
    no_match();
    return trace;
  }

  std::vector<const Document*> docs;
  for (const auto& id : survivors) docs.push_back(corpus_.find(id));
  trace.extracted = plan.task == TaskType::count
                        ? entity_records(docs)
                        : extract_records(docs, plan.attribute, config_.extraction, &reader_,
                                          trace.errors);
  try {
    trace.result = apply_task(plan, trace.extracted);
    trace.answer_text = trace.result->answer_text;
  } catch (const EmptyInputError&) {
    no_match();
  } catch (const std::exception& e) {
    trace.errors.push_back(std::string("aggregation: ") + e.what());
  }
  return trace;
}

std::string Pipeline::context_for(std::span<const DocId> ids) const {
  std::string out;
  for (const auto& id : ids) {
    const Document* d = corpus_.find(id);
    if (!d) continue;
    out += "Document " + d->id + ":\n" + d->text + "\n";
  }
  return out;
}

RunTrace Pipeline::run_baseline(const std::string& query_id, const std::string& query) {
  RunTrace trace;
  trace.query_id = query_id;
  trace.query = query;
  trace.strategy = config_.strategy == Strategy::globalrag ? Strategy::standard_rag : config_.strategy;
  try {
    trace.task = classify_task(query, nullptr);
  } catch (const ClassificationError&) {
    // Baselines answer free-form; the task label is informational only.
  }
  return trace.strategy == Strategy::iterative ? run_iterative(std::move(trace))
                                                : run_standard(std::move(trace));
}

RunTrace Pipeline::run_standard(RunTrace trace) {
  IterationTrace iter;
  iter.subquery = trace.query;
  try {
    for (const auto& h : retriever_.retrieve(trace.query, config_.retrieve_k)) {
      iter.hit_ids.push_back(h.doc_id);
    }
  } catch (const std::exception& e) {
    trace.errors.push_back(std::string("retrieval: ") + e.what());
  }
  iter.surviving_ids = iter.hit_ids;
  trace.retrieved_ids_at_k = iter.hit_ids;
  const std::string context = context_for(iter.hit_ids);
  trace.iterations.push_back(std::move(iter));
  try {
    trace.answer_text = trim(reader_.ask(
        std::string(prompts::kReaderSystem),
        prompts::fill(prompts::kReaderUser, {{"context", context}, {"query", trace.query}})));
  } catch (const std::exception& e) {
    trace.errors.push_back(std::string("reader: ") + e.what());
  }
  return trace;
}

RunTrace Pipeline::run_iterative(RunTrace trace) {
  std::vector<DocId> seen;
  std::set<DocId> seen_set;
  std::string history;
  std::string subquery = trace.query;
  std::optional<std::string> answer;
  for (std::size_t step = 0; step < config_.max_iterations; ++step) {
    IterationTrace iter;
    iter.subquery = subquery;
    try {
      for (const auto& h : retriever_.retrieve(subquery, config_.retrieve_k)) {
        iter.hit_ids.push_back(h.doc_id);
        if (seen_set.insert(h.doc_id).second) seen.push_back(h.doc_id);
      }
    } catch (const std::exception& e) {
      trace.errors.push_back(std::string("retrieval: ") + e.what());
    }
    iter.surviving_ids = iter.hit_ids;
    trace.iterations.push_back(std::move(iter));

    std::string reply;
    try {
      reply = trim(reader_.ask(std::string(prompts::kReasonerSystem),
                               prompts::fill(prompts::kReasonerUser, {{"context", context_for(seen)},
                                                                      {"query", trace.query},
                                                                      {"history", history}})));
    } catch (const std::exception& e) {
      trace.errors.push_back(std::string("reasoner: ") + e.what());
      break;
    }
    const std::string low = lower(reply);
    if (low.starts_with("answer:")) {
      answer = trim(std::string_view(reply).substr(7));
      break;
    }
    if (low.starts_with("done")) break;
    history += reply + "\n";
    subquery = low.starts_with("search:") ? trim(std::string_view(reply).substr(7)) : reply;
    if (subquery.empty()) break;
  }
  trace.retrieved_ids_at_k = seen;
  if (answer) {
    trace.answer_text = *answer;
    return trace;
  }
  try {
    trace.answer_text = trim(reader_.ask(
        std::string(prompts::kReaderSystem),
        prompts::fill(prompts::kReaderUser, {{"context", context_for(seen)}, {"query", trace.query}})));
  } catch (const std::exception& e) {
    trace.errors.push_back(std::string("reader: ") + e.what());
  }
  return trace;
}

std::vector<RunTrace> Pipeline::run_batch(std::span<const QueryRecord> records, std::size_t jobs) {
  std::vector<RunTrace> out(records.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      try {
        out[i] = run(records[i].id, records[i].question);
      } catch (const std::exception& e) {
        out[i] = RunTrace{};
        out[i].query_id = records[i].id;
        out[i].query = records[i].question;
        out[i].strategy = config_.strategy;
        out[i].errors.push_back(std::string("pipeline: ") + e.what());
      }
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, records.size()));
  if (jobs == 1) {
    worker();
    return out;
  }
  std::vector<std::jthread> threads;
  for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
  threads.clear();
  return out;
}

}  // namespace globalrag
