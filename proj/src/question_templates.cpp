#include "globalrag/question_templates.hpp"

#include <array>
#include <regex>

#include "globalrag/errors.hpp"
#include "globalrag/prompts.hpp"

namespace globalrag {

namespace {

constexpr std::array<QuestionTemplate, 12> kTemplates{{
    {TaskType::count, "How many candidates {cond}?", "", ""},
    {TaskType::count, "Count the candidates who {cond}.", "", ""},
    {TaskType::count, "What is the number of candidates who {cond}?", "", ""},

    {TaskType::minmax, "Among candidates who {cond}, who has the {dir} {noun}?", "most", "fewest"},
    {TaskType::minmax, "Which candidate who {cond} has the {dir} {noun}?", "most", "least"},
    {TaskType::minmax, "Find the candidate with the {dir} {noun} among those who {cond}.", "most",
     "fewest"},

    {TaskType::sort, "Rank all candidates who {cond} by {noun} in {dir} order.", "descending",
     "ascending"},
    {TaskType::sort, "Sort the candidates who {cond} from {dir} {noun}.", "most to fewest",
     "fewest to most"},
    {TaskType::sort, "List every candidate who {cond} ordered by {noun}, {dir} first.", "highest",
     "lowest"},

    {TaskType::topk, "Who are the {dir} {k} candidates by {noun} among those who {cond}?", "top",
     "bottom"},
    {TaskType::topk, "List the {k} candidates with the {dir} {noun} among those who {cond}.",
     "most", "fewest"},
    {TaskType::topk, "Name the {dir} {k} candidates who {cond}, ranked by {noun}.", "top",
     "bottom"},
}};

std::string regex_escape(std::string_view s) {
  static const std::string special = R"(\^$.|?*+()[]{})";
  std::string out;
  for (char c : s) {
    if (special.find(c) != std::string::npos) out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

enum class Slot { cond, noun, dir, k };

struct CompiledTemplate {
  std::regex re;
  std::vector<Slot> slots;  // capture-group order
};

CompiledTemplate compile(const QuestionTemplate& t) {
  std::string nouns;
  for (const auto& a : kNumericAttributes) {
    if (!nouns.empty()) nouns += "|";
    nouns += regex_escape(a.noun);
  }
  CompiledTemplate out;
  std::string re = "^";
  std::string_view p = t.pattern;
  std::size_t i = 0;
  while (i < p.size()) {
    if (p[i] == '{') {
      auto close = p.find('}', i);
      auto key = p.substr(i + 1, close - i - 1);
      if (key == "cond") {
        re += "(.+)";
        out.slots.push_back(Slot::cond);
      } else if (key == "noun") {
        re += "(" + nouns + ")";
        out.slots.push_back(Slot::noun);
      } else if (key == "dir") {
        re += "(" + regex_escape(t.desc_word) + "|" + regex_escape(t.asc_word) + ")";
        out.slots.push_back(Slot::dir);
      } else {
        re += "([0-9]+)";
        out.slots.push_back(Slot::k);
      }
      i = close + 1;
    } else {
      re += regex_escape(p.substr(i, 1));
      ++i;
    }
  }
  re += "$";
  out.re = std::regex(re, std::regex::ECMAScript);
  return out;
}

const std::vector<CompiledTemplate>& compiled() {
  static const std::vector<CompiledTemplate> all = [] {
    std::vector<CompiledTemplate> v;
    for (const auto& t : kTemplates) v.push_back(compile(t));
    return v;
  }();
  return all;
}

}  // namespace

std::span<const QuestionTemplate> question_templates() { return kTemplates; }

std::vector<std::size_t> templates_for(TaskType task) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < kTemplates.size(); ++i) {
    if (kTemplates[i].task == task) out.push_back(i);
  }
  return out;
}

std::string render_template(std::size_t template_id, std::string_view conditions,
                            const TaskPlan& plan) {
  if (template_id >= kTemplates.size()) {
    throw InputError("no question template " + std::to_string(template_id));
  }
  const auto& t = kTemplates[template_id];
  if (t.task != plan.task) throw InputError("template task does not match plan");
  std::string noun;
  if (plan.task != TaskType::count) {
    const auto* attr = find_numeric_attribute(plan.attribute);
    if (!attr) throw InputError("no question wording for attribute '" + plan.attribute + "'");
    noun = attr->noun;
  }
  const std::string k = std::to_string(plan.k);
  const std::string_view dir = plan.direction == Direction::desc ? t.desc_word : t.asc_word;
  return prompts::fill(t.pattern, {{"cond", conditions}, {"noun", noun}, {"dir", dir}, {"k", k}});
}

std::optional<QuestionMatch> match_question(std::string_view question) {
  const std::string q(question);
  const auto& all = compiled();
  for (std::size_t i = 0; i < all.size(); ++i) {
    std::smatch m;
    if (!std::regex_match(q, m, all[i].re)) continue;
    QuestionMatch out;
    out.template_id = i;
    out.plan.task = kTemplates[i].task;
    for (std::size_t s = 0; s < all[i].slots.size(); ++s) {
      const std::string value = m[s + 1].str();
      switch (all[i].slots[s]) {
        case Slot::cond: out.conditions = value; break;
        case Slot::noun: out.plan.attribute = find_numeric_attribute_by_noun(value)->name; break;
        case Slot::dir:
          out.plan.direction = value == kTemplates[i].desc_word ? Direction::desc : Direction::asc;
          break;
        case Slot::k: out.plan.k = std::stoul(value); break;
      }
    }
    return out;
  }
  return std::nullopt;
}

}  // namespace globalrag
