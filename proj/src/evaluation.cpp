#include "globalrag/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "globalrag/errors.hpp"

namespace globalrag {

using json = nlohmann::json;

std::string normalize_answer(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::ispunct(u)) continue;
    cleaned.push_back(std::isspace(u) ? ' ' : static_cast<char>(std::tolower(u)));
  }
  std::istringstream words(cleaned);
  std::string out;
  for (std::string w; words >> w;) {
    if (w == "a" || w == "an" || w == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

std::vector<std::string> answer_tokens(std::string_view text) {
  std::istringstream words(normalize_answer(text));
  std::vector<std::string> out;
  for (std::string w; words >> w;) out.push_back(std::move(w));
  return out;
}

double token_f1(std::string_view prediction, std::string_view gold) {
  const auto pred = answer_tokens(prediction);
  const auto ref = answer_tokens(gold);
  if (pred.empty() && ref.empty()) return 1.0;
  if (pred.empty() || ref.empty()) return 0.0;
  std::map<std::string, std::size_t> counts;
  for (const auto& t : ref) ++counts[t];
  std::size_t common = 0;
  for (const auto& t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double p = static_cast<double>(common) / static_cast<double>(pred.size());
  const double r = static_cast<double>(common) / static_cast<double>(ref.size());
  return 2.0 * p * r / (p + r);
}

double doc_f1_at_k(std::span<const DocId> retrieved, const DocIdSet& gold, std::size_t k) {
  if (k == 0) throw InputError("k must be positive");
  if (gold.empty()) throw InputError("gold document set is empty");
  std::set<std::string_view> unique;
  for (const auto& id : retrieved) {
    if (!unique.insert(id).second) throw InputError("duplicate retrieved id '" + id + "'");
  }
  const std::size_t n = std::min(k, retrieved.size());
  std::size_t hit = 0;
  for (std::size_t i = 0; i < n; ++i) hit += gold.contains(retrieved[i]) ? 1 : 0;
  if (hit == 0) return 0.0;
  const double p = static_cast<double>(hit) / static_cast<double>(n);
  const double r = static_cast<double>(hit) / static_cast<double>(gold.size());
  return 2.0 * p * r / (p + r);
}

EvalReport evaluate_batch(std::span<const RunTrace> traces, std::span<const QueryRecord> dataset,
                          std::size_t k) {
  if (k == 0) throw InputError("k must be positive");
  std::map<std::string, const QueryRecord*> by_id;
  for (const auto& r : dataset) by_id.emplace(r.id, &r);
  std::vector<std::string> orphans;
  for (const auto& t : traces) {
    if (!by_id.contains(t.query_id)) orphans.push_back(t.query_id);
  }
  if (!orphans.empty()) {
    std::string list;
    for (const auto& o : orphans) list += (list.empty() ? "" : ", ") + o;
    throw JoinError(orphans, "traces without a dataset record: " + list);
  }

  struct Sums {
    double f1 = 0.0, d_f1 = 0.0;
    std::size_t n = 0;
  };
  std::map<TaskType, Sums> sums;
  Sums pooled;
  EvalReport report;
  report.k = k;
  for (const auto& t : traces) {
    const QueryRecord& rec = *by_id.at(t.query_id);
    if (rec.gold_doc_ids.empty()) {
      ++report.skipped;
      continue;
    }
    const double f1 = token_f1(t.answer_text, rec.gold_answer);
    const double d = doc_f1_at_k(t.retrieved_ids_at_k, rec.gold_doc_ids, k);
    auto& s = sums[rec.task];
    s.f1 += f1;
    s.d_f1 += d;
    ++s.n;
    pooled.f1 += f1;
    pooled.d_f1 += d;
    ++pooled.n;
  }

  Sums macro;
  for (auto task : kAllTasks) {
    TaskScore score;
    const Sums& s = sums[task];
    score.n = s.n;
    if (s.n > 0) {
      score.f1 = s.f1 / static_cast<double>(s.n);
      score.d_f1 = s.d_f1 / static_cast<double>(s.n);
      macro.f1 += *score.f1;
      macro.d_f1 += *score.d_f1;
      ++macro.n;
    }
    report.per_task[task] = score;
  }
  if (macro.n > 0) {
    report.macro_avg.f1 = macro.f1 / static_cast<double>(macro.n);
    report.macro_avg.d_f1 = macro.d_f1 / static_cast<double>(macro.n);
  }
  report.macro_avg.n = pooled.n;
  report.micro_avg.n = pooled.n;
  if (pooled.n > 0) {
    report.micro_avg.f1 = pooled.f1 / static_cast<double>(pooled.n);
    report.micro_avg.d_f1 = pooled.d_f1 / static_cast<double>(pooled.n);
  }
  return report;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json score_json(const TaskScore& s) {
  return json{{"f1", opt(s.f1)}, {"d_f1", opt(s.d_f1)}, {"n", s.n}};
}

std::string cell(const std::optional<double>& v) {
  if (!v) return "—";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v * 100.0);
  return buf;
}

/// Pads by display width; the dash is one column but three bytes.
std::string pad(const std::string& s, std::size_t width) {
  std::size_t shown = 0;
  for (unsigned char c : s) shown += (c & 0xC0) != 0x80 ? 1 : 0;
  return std::string(shown < width ? width - shown : 0, ' ') + s;
}

}  // namespace

json to_json(const EvalReport& report) {
  json per_task = json::object();
  for (const auto& [task, score] : report.per_task) per_task[std::string(to_string(task))] = score_json(score);
  return json{{"k", report.k},
              {"per_task", per_task},
              {"macro_avg", score_json(report.macro_avg)},
              {"micro_avg", score_json(report.micro_avg)},
              {"skipped", report.skipped}};
}

EvalReport report_from_json(const json& j) {
  auto score = [](const json& s) {
    TaskScore out;
    if (s.contains("f1") && !s.at("f1").is_null()) out.f1 = s.at("f1").get<double>();
    if (s.contains("d_f1") && !s.at("d_f1").is_null()) out.d_f1 = s.at("d_f1").get<double>();
    out.n = s.value("n", std::size_t{0});
    return out;
  };
  try {
    EvalReport r;
    r.k = j.at("k").get<std::size_t>();
    for (auto task : kAllTasks) {
      const auto& per = j.at("per_task");
      const std::string name(to_string(task));
      r.per_task[task] = per.contains(name) ? score(per.at(name)) : TaskScore{};
    }
    r.macro_avg = score(j.at("macro_avg"));
    r.micro_avg = score(j.at("micro_avg"));
    r.skipped = j.value("skipped", std::size_t{0});
    return r;
  } catch (const std::exception& e) {
    throw ParseError(0, std::string("bad report: ") + e.what());
  }
}

std::string format_report_table(const EvalReport& report) {
  const std::vector<std::pair<std::string, TaskScore>> columns{
      {"TopK", report.per_task.at(TaskType::topk)},
      {"Count", report.per_task.at(TaskType::count)},
      {"Sort", report.per_task.at(TaskType::sort)},
      {"MinMax", report.per_task.at(TaskType::minmax)},
      {"Avg", report.macro_avg},
  };
  constexpr std::size_t w = 9;
  std::string out = pad("", 12);
  for (const auto& [name, _] : columns) out += pad(name, w);
  out += "\n";
  auto row = [&](const std::string& label, auto getter) {
    std::string line = label + std::string(label.size() < 12 ? 12 - label.size() : 0, ' ');
    for (const auto& [_, s] : columns) line += pad(getter(s), w);
    return line + "\n";
  };
  out += row("F1", [](const TaskScore& s) { return cell(s.f1); });
  out += row("D-F1@" + std::to_string(report.k), [](const TaskScore& s) { return cell(s.d_f1); });
  out += row("n", [](const TaskScore& s) { return std::to_string(s.n); });
  out += "micro avg F1 " + cell(report.micro_avg.f1) + ", D-F1 " + cell(report.micro_avg.d_f1) +
         "; skipped " + std::to_string(report.skipped) + "\n";
  return out;
}

}  // namespace globalrag
