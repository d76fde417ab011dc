#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "globalrag/task.hpp"

namespace globalrag {

/// A question pattern. Placeholders: {cond} relative clause listing the
/// conditions, {noun} attribute noun phrase, {dir} direction word, {k} count.
struct QuestionTemplate {
  TaskType task;
  std::string_view pattern;
  std::string_view desc_word;  // empty for count
  std::string_view asc_word;
};

/// The full bank; a template's position is its stable id.
std::span<const QuestionTemplate> question_templates();
std::vector<std::size_t> templates_for(TaskType task);

/// Instantiates template `template_id`. Throws InputError for a bad id or a
/// plan that does not fit the template's task.
std::string render_template(std::size_t template_id, std::string_view conditions,
                            const TaskPlan& plan);

struct QuestionMatch {
  std::size_t template_id = 0;
  TaskPlan plan;
  std::string conditions;
};

/// Inverts render_template: matches `question` against every template.
std::optional<QuestionMatch> match_question(std::string_view question);

}  // namespace globalrag
