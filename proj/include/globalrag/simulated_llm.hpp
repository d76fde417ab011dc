#pragma once

#include <memory>
#include <span>

#include "globalrag/corpus.hpp"
#include "globalrag/generator.hpp"
#include "globalrag/llm_gateway.hpp"

namespace globalrag {

/// What the simulated planner proposes after step 0.
enum class PlannerMode {
  done,     // stop immediately
  clauses,  // one sub-query per trajectory step, then DONE
};

struct SimulatedLlmOptions {
  PlannerMode planner = PlannerMode::clauses;
};

/// A mock backend whose responders answer every prompt family from the corpus
/// and the dataset, for offline runs:
///   filter      "yes" exactly for the question's gold documents
///   planner     per PlannerMode
///   classifier  the dataset's task label
///   extractor   the attribute's text pattern applied to the document
///   reader      the task tool applied to the documents in its context
///   reasoner    "SEARCH:" per trajectory step, then "ANSWER:" like the reader
/// Prompts for unknown questions fall through to MockMissError, except the
/// filter (answers "no") and the planner (answers "DONE").
std::shared_ptr<MockChatBackend> make_simulated_backend(const Corpus& corpus,
                                                        std::span<const QueryRecord> dataset,
                                                        SimulatedLlmOptions options = {});

}  // namespace globalrag
