#pragma once

// Sentence-by-sentence generation: reason over the recent context, realize
// one sentence from the inferred paths, append it and repeat.

#include <string>
#include <string_view>
#include <vector>

#include "mrg/graph.hpp"
#include "mrg/labeller.hpp"
#include "mrg/realizer.hpp"
#include "mrg/reasoner.hpp"

namespace mrg {

struct GeneratorConfig {
  std::size_t max_sentences = 4;
  std::size_t window = 1;  // context = this many most recent sentences
  ReasonerConfig reasoner;
};

enum class StopReason { max_sentences, empty_frontier, no_target };

std::string_view stop_reason_name(StopReason reason);

struct GenerationState {
  std::string source;
  std::vector<std::string> source_tokens;
  std::vector<std::vector<std::string>> generated_sentences;  // tokenized
  std::vector<std::vector<InferredPath>> per_sentence_paths;  // parallel to generated_sentences
  std::vector<std::vector<std::string>> contexts;             // context tokens used for each sentence
  StopReason stop_reason = StopReason::max_sentences;

  /// Space-joined tokens of every generated sentence.
  std::vector<std::string> sentence_texts() const;
};

/// Tokens of the last `window` sentences of `history`.
std::vector<std::string> context_window(const std::vector<std::vector<std::string>>& history, std::size_t window);

GenerationState generate(std::string_view source, const ConceptGraph& graph, const CandidateLabeller& labeller,
                         const SentenceRealizer& realizer, const GeneratorConfig& config);

/// One JSON object: source, sentences, paths, stop_reason.
std::string generation_to_json(const GenerationState& state);

}  // namespace mrg
